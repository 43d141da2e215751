#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perfsim {

enum class errc {
  unassigned_spin,
  infinite_support,
  vertex_not_in_set,
  invalid_model,
  center_mismatch,
  tail_not_boundable,
  numerical_inconsistency,
  not_pairwise,
  too_many_hyperedges,
  block_too_large,
  unsupported_model_class,
  step_limit_exceeded,
  empty_window,
  internal_invariant_violation,
  region_too_large,
  infinite_exceptional_region,
  invalid_sequence,
  config_error,
};

inline std::string_view to_string(errc code) {
  switch (code) {
    case errc::unassigned_spin: return "UnassignedSpin";
    case errc::infinite_support: return "InfiniteSupport";
    case errc::vertex_not_in_set: return "VertexNotInSet";
    case errc::invalid_model: return "InvalidModel";
    case errc::center_mismatch: return "CenterMismatch";
    case errc::tail_not_boundable: return "TailNotBoundable";
    case errc::numerical_inconsistency: return "NumericalInconsistency";
    case errc::not_pairwise: return "NotPairwise";
    case errc::too_many_hyperedges: return "TooManyHyperedges";
    case errc::block_too_large: return "BlockTooLarge";
    case errc::unsupported_model_class: return "UnsupportedModelClass";
    case errc::step_limit_exceeded: return "StepLimitExceeded";
    case errc::empty_window: return "EmptyWindow";
    case errc::internal_invariant_violation: return "InternalInvariantViolation";
    case errc::region_too_large: return "RegionTooLarge";
    case errc::infinite_exceptional_region: return "InfiniteExceptionalRegion";
    case errc::invalid_sequence: return "InvalidSequence";
    case errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the `errc` codes so
/// callers (and the CLI exit-code mapping) can branch on the kind.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace perfsim
