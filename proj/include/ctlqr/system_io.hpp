#pragma once

#include <iosfwd>
#include <string>
#include <utility>

#include "ctlqr/model.hpp"

namespace ctlqr {

/// Plain-text system description:
///
///   # comment
///   p=4
///   q=2
///   A
///   <p rows of p numbers>
///   B
///   <p rows of q numbers>
///   sigma
///   <p rows of p numbers>
///   Q
///   <p rows of p numbers>
///   R
///   <q rows of q numbers>
///
/// Blocks may appear in any order; all five are required.
std::pair<Dynamics, CostSpec> parse_system(std::istream& in);
std::pair<Dynamics, CostSpec> load_system(const std::string& path);

void write_system(std::ostream& out, const Dynamics& dyn,
                  const CostSpec& cost);

}  // namespace ctlqr
