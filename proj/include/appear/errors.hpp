#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace appear {

// Every failure raised by the library derives from Error. InputError covers
// problems with what the caller handed in (bad files, bad arguments);
// PipelineError covers data that cannot be processed further. The CLI maps
// these two families onto exit codes 2 and 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class PipelineError : public Error {
public:
    using Error::Error;
};

#define APPEAR_DECLARE_ERROR(Name, Base)          \
    class Name : public Base {                    \
    public:                                       \
        explicit Name(const std::string& what)    \
            : Base(#Name ": " + what) {}          \
    }

APPEAR_DECLARE_ERROR(ArgumentError, InputError);
APPEAR_DECLARE_ERROR(BoundsError, InputError);
APPEAR_DECLARE_ERROR(ParseError, InputError);
APPEAR_DECLARE_ERROR(FormatError, InputError);
APPEAR_DECLARE_ERROR(IoError, InputError);
APPEAR_DECLARE_ERROR(EmptyDataError, InputError);
APPEAR_DECLARE_ERROR(InsufficientDataError, InputError);
APPEAR_DECLARE_ERROR(LayoutError, InputError);

APPEAR_DECLARE_ERROR(InsufficientEpochsError, PipelineError);
APPEAR_DECLARE_ERROR(InsufficientEventsError, PipelineError);
APPEAR_DECLARE_ERROR(NoPeaksError, PipelineError);
APPEAR_DECLARE_ERROR(NoCandidateError, PipelineError);
APPEAR_DECLARE_ERROR(UnreliableError, PipelineError);
APPEAR_DECLARE_ERROR(ExcessiveArtifactError, PipelineError);
APPEAR_DECLARE_ERROR(SingularMatrixError, PipelineError);
APPEAR_DECLARE_ERROR(DegenerateError, PipelineError);

#undef APPEAR_DECLARE_ERROR

// Slice-trigger count is not a multiple of the slices per volume.
class TriggerCountError : public InputError {
public:
    TriggerCountError(std::size_t count, std::size_t slices)
        : InputError("TriggerCountError: " + std::to_string(count) +
                     " slice triggers is not a multiple of " + std::to_string(slices) +
                     " (remainder " + std::to_string(count % slices) + ")"),
          remainder_(count % slices) {}

    std::size_t remainder() const noexcept { return remainder_; }

private:
    std::size_t remainder_;
};

} // namespace appear
