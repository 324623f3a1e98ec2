#pragma once

#include <stdexcept>
#include <string>

namespace kdp {

// All toolkit failures derive from Error so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define KDP_DEFINE_ERROR(name)                                   \
  struct name : Error {                                          \
    explicit name(const std::string& what) : Error(what) {}      \
  }

KDP_DEFINE_ERROR(InvalidSpec);
KDP_DEFINE_ERROR(MomentUndefined);
KDP_DEFINE_ERROR(IndexBeyondTable);
KDP_DEFINE_ERROR(NonFiniteInput);
KDP_DEFINE_ERROR(PrefixPointHasNoGenealogy);
KDP_DEFINE_ERROR(MissingGenealogy);
KDP_DEFINE_ERROR(ZeroDenominator);
KDP_DEFINE_ERROR(ZeroFactor);
KDP_DEFINE_ERROR(NoEnvelope);
KDP_DEFINE_ERROR(TooFewReplications);
KDP_DEFINE_ERROR(DomainError);
KDP_DEFINE_ERROR(TrajectoryTooShort);
KDP_DEFINE_ERROR(EmptyData);
KDP_DEFINE_ERROR(ConfigError);
KDP_DEFINE_ERROR(IoError);

#undef KDP_DEFINE_ERROR

}  // namespace kdp
