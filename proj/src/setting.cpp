#include "dreamhop/setting.hpp"

#include "dreamhop/errors.hpp"

namespace dreamhop {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::BasicStoring: return "storing";
    case Variant::Supervised: return "supervised";
    case Variant::Unsupervised: return "unsupervised";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "storing" || name == "a") return Variant::BasicStoring;
  if (name == "supervised" || name == "b") return Variant::Supervised;
  if (name == "unsupervised" || name == "c") return Variant::Unsupervised;
  throw DomainError("unknown setting '" + std::string(name) + "'");
}

void ModelSetting::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("setting: alpha must lie in (0,1]");
  if (!(quality >= 0.0 && quality <= 1.0)) throw DomainError("setting: r must lie in [0,1]");
  if (per_class < 1) throw DomainError("setting: M must be >= 1");
}

bool ModelSetting::full_rank_unsupervised() const noexcept {
  return static_cast<double>(per_class) * alpha >= 1.0;
}

}  // namespace dreamhop
