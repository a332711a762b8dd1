#pragma once

#include <string>
#include <string_view>

#include "multistab/model.hpp"

namespace multistab {

/// Continuation parameter. Eps sets eps_x = eps_y together.
enum class Parameter { Eps, EpsX, EpsY, Current };

Parameter parse_parameter(std::string_view name);
std::string to_string(Parameter p);

double get_parameter(Parameter which, const ModelParams& p, const CouplingConfig& c);
void set_parameter(Parameter which, double value, ModelParams& p, CouplingConfig& c);

enum class BifurcationKind { SNLC, Torus, Hopf, Homoclinic, Fold };

std::string to_string(BifurcationKind k);

struct BifurcationEvent {
  BifurcationKind kind;
  double param_value;
  int branch_id = 0;
  /// Multiplier or eigenvalue modulus at the event, or the period at truncation.
  double diagnostic = 0.0;
  std::string note;
};

}  // namespace multistab
