#pragma once

#include <stdexcept>
#include <string>

namespace cfcast {

/// Every failure the library reports deliberately carries one of these codes,
/// so callers (and tests) can dispatch on the condition rather than parse
/// message strings.
enum class errc {
  length_mismatch,
  bad_t0,
  no_treated,
  no_control,
  too_short,
  not_square,
  not_symmetric,
  factorization_failed,
  singular,
  non_finite_objective,
  bad_tau,
  unsorted_taus,
  too_few_donors,
  no_valid_model,
  degenerate_sigma,
  zero_denominator,
  too_short_insample,
  empty_group,
  missing_forecast,
  missing_column,
  duplicate_key,
  gap_in_periods,
  unparseable_value,
  coverage_gap,
  unknown_unit,
  unknown_model,
  http_error,
  auth_error,
  schema_drift,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::length_mismatch:      return "LengthMismatch";
    case errc::bad_t0:               return "BadT0";
    case errc::no_treated:           return "NoTreated";
    case errc::no_control:           return "NoControl";
    case errc::too_short:            return "TooShort";
    case errc::not_square:           return "NotSquare";
    case errc::not_symmetric:        return "NotSymmetric";
    case errc::factorization_failed: return "FactorizationFailed";
    case errc::singular:             return "Singular";
    case errc::non_finite_objective: return "NonFiniteObjective";
    case errc::bad_tau:              return "BadTau";
    case errc::unsorted_taus:        return "UnsortedTaus";
    case errc::too_few_donors:       return "TooFewDonors";
    case errc::no_valid_model:       return "NoValidModel";
    case errc::degenerate_sigma:     return "DegenerateSigma";
    case errc::zero_denominator:     return "ZeroDenominator";
    case errc::too_short_insample:   return "TooShortInsample";
    case errc::empty_group:          return "EmptyGroup";
    case errc::missing_forecast:     return "MissingForecast";
    case errc::missing_column:       return "MissingColumn";
    case errc::duplicate_key:        return "DuplicateKey";
    case errc::gap_in_periods:       return "GapInPeriods";
    case errc::unparseable_value:    return "UnparseableValue";
    case errc::coverage_gap:         return "CoverageGap";
    case errc::unknown_unit:         return "UnknownUnit";
    case errc::unknown_model:        return "UnknownModel";
    case errc::http_error:           return "HttpError";
    case errc::auth_error:           return "AuthError";
    case errc::schema_drift:         return "SchemaDrift";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace cfcast
