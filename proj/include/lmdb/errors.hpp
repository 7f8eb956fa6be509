#pragma once

#include <stdexcept>
#include <string>

namespace lmdb {

// Base of every error the library throws. Catch this to handle any
// library failure; catch a subclass to react to one condition.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LMDB_DEFINE_ERROR(Name) \
  class Name : public Error {   \
   public:                      \
    using Error::Error;         \
  }

LMDB_DEFINE_ERROR(InvalidItem);
LMDB_DEFINE_ERROR(DuplicateItem);
LMDB_DEFINE_ERROR(DimensionMismatch);
LMDB_DEFINE_ERROR(UndefinedSimilarity);
LMDB_DEFINE_ERROR(InsufficientCandidates);
LMDB_DEFINE_ERROR(ExhaustedCandidates);
LMDB_DEFINE_ERROR(TooLargeInstance);
LMDB_DEFINE_ERROR(DegenerateInstance);
LMDB_DEFINE_ERROR(NumericalDegeneracy);
LMDB_DEFINE_ERROR(PreconditionViolation);
LMDB_DEFINE_ERROR(InvalidFeedback);
LMDB_DEFINE_ERROR(ProtocolViolation);
LMDB_DEFINE_ERROR(UndefinedDiversity);
LMDB_DEFINE_ERROR(ParseError);
LMDB_DEFINE_ERROR(EmptyDataset);
LMDB_DEFINE_ERROR(ConfigError);

#undef LMDB_DEFINE_ERROR

}  // namespace lmdb
