#include "multistab/parameter.hpp"

#include "multistab/error.hpp"

namespace multistab {

Parameter parse_parameter(std::string_view name) {
  if (name == "eps") return Parameter::Eps;
  if (name == "eps_x") return Parameter::EpsX;
  if (name == "eps_y") return Parameter::EpsY;
  if (name == "current" || name == "I") return Parameter::Current;
  throw ConfigError("unknown parameter '" + std::string(name) + "' (expected eps, eps_x, eps_y or current)");
}

std::string to_string(Parameter p) {
  switch (p) {
    case Parameter::Eps: return "eps";
    case Parameter::EpsX: return "eps_x";
    case Parameter::EpsY: return "eps_y";
    case Parameter::Current: return "current";
  }
  return "?";
}

double get_parameter(Parameter which, const ModelParams& p, const CouplingConfig& c) {
  switch (which) {
    case Parameter::Eps:
    case Parameter::EpsX: return c.eps_x();
    case Parameter::EpsY: return c.eps_y();
    case Parameter::Current: return p.current;
  }
  return 0.0;
}

void set_parameter(Parameter which, double value, ModelParams& p, CouplingConfig& c) {
  switch (which) {
    case Parameter::Eps: c.set_eps(value, value); break;
    case Parameter::EpsX: c.set_eps(value, c.eps_y()); break;
    case Parameter::EpsY: c.set_eps(c.eps_x(), value); break;
    case Parameter::Current: p.current = value; break;
  }
}

std::string to_string(BifurcationKind k) {
  switch (k) {
    case BifurcationKind::SNLC: return "SNLC";
    case BifurcationKind::Torus: return "TORUS";
    case BifurcationKind::Hopf: return "HOPF";
    case BifurcationKind::Homoclinic: return "HOM";
    case BifurcationKind::Fold: return "FOLD";
  }
  return "?";
}

}  // namespace multistab
