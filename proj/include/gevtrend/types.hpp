#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace gevtrend {

/// Grid cell, identified by the integer longitude/latitude of its south-west corner.
struct CellId {
  int lon = 0;
  int lat = 0;

  auto operator<=>(const CellId&) const = default;
};

enum class Variable { Prod, Cape, Srh };
enum class Covariate { Time, Enso };

std::string_view to_string(Variable v);
std::string_view to_string(Covariate c);
Variable parse_variable(std::string_view s);
Covariate parse_covariate(std::string_view s);

std::string cell_label(CellId c);

}  // namespace gevtrend
