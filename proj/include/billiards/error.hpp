#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace billiards {

enum class ErrorKind {
    InvalidSpec,
    InvalidInput,
    TangentialInput,
    DegenerateChord,
    TangentialChord,
    ExteriorChord,
    TangentialHit,
    CornerHit,
    NoIntersection,
    FlatEndpoint,
    IndexOutOfRange,
    PoleAtSample,
    DegenerateString,
    NoOrbitFound,
    WallExit,
    BulgeTouchesMeridian,
};

constexpr std::string_view error_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::TangentialInput: return "tangential-input";
    case ErrorKind::DegenerateChord: return "degenerate-chord";
    case ErrorKind::TangentialChord: return "tangential-chord";
    case ErrorKind::ExteriorChord: return "exterior-chord";
    case ErrorKind::TangentialHit: return "tangential-hit";
    case ErrorKind::CornerHit: return "corner-hit";
    case ErrorKind::NoIntersection: return "no-intersection";
    case ErrorKind::FlatEndpoint: return "flat-endpoint";
    case ErrorKind::IndexOutOfRange: return "index-out-of-range";
    case ErrorKind::PoleAtSample: return "pole-at-sample";
    case ErrorKind::DegenerateString: return "degenerate-string";
    case ErrorKind::NoOrbitFound: return "no-orbit-found";
    case ErrorKind::WallExit: return "wall-exit";
    case ErrorKind::BulgeTouchesMeridian: return "bulge-touches-meridian";
    }
    return "unknown";
}

/// Errors caused by the caller's input (exit code 2 in the CLI); everything
/// else is a numerical failure (exit code 3).
constexpr bool is_input_error(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::InvalidInput:
    case ErrorKind::TangentialInput:
    case ErrorKind::DegenerateString:
    case ErrorKind::BulgeTouchesMeridian:
        return true;
    default:
        return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> index = {})
        : std::runtime_error(std::string(error_name(kind)) + ": " + what)
        , kind_(kind)
        , index_(index)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept { return error_name(kind_); }

    /// Step index at which an iterated computation failed, if any.
    std::optional<std::size_t> index() const noexcept { return index_; }

    Error at_index(std::size_t i) const
    {
        Error e(*this);
        e.index_ = i;
        return e;
    }

private:
    ErrorKind kind_;
    std::optional<std::size_t> index_;
};

} // namespace billiards
