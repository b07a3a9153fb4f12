#include "gevtrend/types.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace gevtrend {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

}  // namespace

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::Prod: return "PROD";
    case Variable::Cape: return "CAPE";
    case Variable::Srh: return "SRH";
  }
  return "?";
}

std::string_view to_string(Covariate c) {
  switch (c) {
    case Covariate::Time: return "time";
    case Covariate::Enso: return "enso";
  }
  return "?";
}

Variable parse_variable(std::string_view s) {
  const auto u = upper(s);
  if (u == "PROD") return Variable::Prod;
  if (u == "CAPE") return Variable::Cape;
  if (u == "SRH") return Variable::Srh;
  throw std::invalid_argument("unknown variable '" + std::string(s) + "'");
}

Covariate parse_covariate(std::string_view s) {
  const auto u = upper(s);
  if (u == "TIME") return Covariate::Time;
  if (u == "ENSO") return Covariate::Enso;
  throw std::invalid_argument("unknown covariate '" + std::string(s) + "'");
}

std::string cell_label(CellId c) { return std::to_string(c.lon) + "_" + std::to_string(c.lat); }

}  // namespace gevtrend
