#ifndef VASMG_ERROR_HPP
#define VASMG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace vasmg {

/// Coarse failure category; the CLI maps it onto its exit status.
enum class error_kind {
    input,      ///< malformed or missing input files, bad configuration
    dimension,  ///< incompatible vector/matrix sizes
    numerical,  ///< lost definiteness, zero pivots, divergence
    geometry    ///< degenerate elements, coincident points, orphan vertices
};

inline std::string_view to_string(error_kind k) {
    switch (k) {
        case error_kind::input:     return "input-error";
        case error_kind::dimension: return "dimension-error";
        case error_kind::numerical: return "numerical-error";
        case error_kind::geometry:  return "geometry-error";
    }
    return "unknown-error";
}

class error : public std::runtime_error {
  public:
    error(error_kind kind, const std::string &what)
        : std::runtime_error(what), kind_(kind) {}

    error_kind kind() const noexcept { return kind_; }

  private:
    error_kind kind_;
};

namespace detail {

inline void require(bool cond, error_kind kind, const std::string &msg) {
    if (!cond) throw error(kind, msg);
}

inline void require_dims(bool cond, const std::string &msg) {
    if (!cond) throw error(error_kind::dimension, msg);
}

} // namespace detail
} // namespace vasmg

#endif
