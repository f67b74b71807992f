#ifndef NOVELTY_COMMON_HPP
#define NOVELTY_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace novelty {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Dense class index into a dataset's class table.
using ClassId = int;

/// Base error for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed configuration, bad arguments, or violated preconditions
/// detectable before any expensive work starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input file problems; the message carries the offending line when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what), line_(0) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Deterministic child seed. Every random stream in the library is keyed this
/// way so that results never depend on the order work is scheduled in.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = detail::splitmix64(base);
    for (auto t : tags) {
        h = detail::splitmix64(h ^ detail::splitmix64(t + 0x632be59bd9b4e019ULL));
    }
    return h;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace novelty

#endif
