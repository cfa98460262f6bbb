#pragma once

#include <stdexcept>
#include <string>

namespace fisherbound {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define FISHERBOUND_DEFINE_ERROR(Name)                        \
  class Name : public Error {                                 \
  public:                                                     \
    explicit Name(const std::string& what) : Error(what) {}   \
  }

FISHERBOUND_DEFINE_ERROR(DimensionMismatch);
FISHERBOUND_DEFINE_ERROR(NotPositiveDefinite);
FISHERBOUND_DEFINE_ERROR(NonFinite);
FISHERBOUND_DEFINE_ERROR(Overflow);
FISHERBOUND_DEFINE_ERROR(OutOfSupport);
FISHERBOUND_DEFINE_ERROR(NonPositiveVariance);
FISHERBOUND_DEFINE_ERROR(NonPositiveFisher);
FISHERBOUND_DEFINE_ERROR(InfeasibleMoments);
FISHERBOUND_DEFINE_ERROR(DegenerateStatistic);
FISHERBOUND_DEFINE_ERROR(UnsupportedStatistic);
FISHERBOUND_DEFINE_ERROR(RankDeficientWeights);
FISHERBOUND_DEFINE_ERROR(EmptyData);
FISHERBOUND_DEFINE_ERROR(NoRootInBracket);
FISHERBOUND_DEFINE_ERROR(OutOfGrid);
FISHERBOUND_DEFINE_ERROR(FormatError);
FISHERBOUND_DEFINE_ERROR(VersionMismatch);
FISHERBOUND_DEFINE_ERROR(SolverFailure);

#undef FISHERBOUND_DEFINE_ERROR

}  // namespace fisherbound
