#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace latentstitch {

enum class ErrorCode {
    // numerical
    NotSPD,
    NotPSD,
    NotSymmetric,
    NoConvergence,
    // shape / contract
    DimensionMismatch,
    BadDims,
    EmptySet,
    ZeroBaseline,
    TooFewSamples,
    Undecodable,
    // data ingestion
    BadMagic,
    VersionUnsupported,
    TruncatedFile,
    NonFiniteValue,
    CountMismatch,
    UnknownValue,
    RaggedRow,
    DuplicateId,
    EmptyIntersection,
    InsufficientRows,
    SingleClassPool,
    InconsistentIds,
    IoError,
    // configuration
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// CLI exit status for an error: 1 config, 2 data, 3 numerical failure.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
    if (!ok) fail(code, what);
}

}  // namespace latentstitch
