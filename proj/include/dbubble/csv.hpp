#pragma once

// CSV emission helpers.  All floating-point fields use 17 significant
// digits so that identical runs produce byte-identical files; infinities
// and NaNs are written as "inf"/"-inf"/"nan".

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

namespace dbubble {

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void csv_field(std::ostream& os, double v) { os << format_double(v); }
inline void csv_field(std::ostream& os, float v) { os << format_double(v); }
inline void csv_field(std::ostream& os, int v) { os << v; }
inline void csv_field(std::ostream& os, long v) { os << v; }
inline void csv_field(std::ostream& os, long long v) { os << v; }
inline void csv_field(std::ostream& os, unsigned v) { os << v; }
inline void csv_field(std::ostream& os, unsigned long v) { os << v; }
inline void csv_field(std::ostream& os, unsigned long long v) { os << v; }
inline void csv_field(std::ostream& os, std::string_view v) { os << v; }
inline void csv_field(std::ostream& os, const char* v) { os << v; }
inline void csv_field(std::ostream& os, const std::string& v) { os << v; }

}  // namespace detail

/// Writes one CSV row (comma-separated, '\n'-terminated).  Numeric fields
/// are formatted deterministically; string fields are emitted verbatim.
template <class T, class... Ts>
void csv_row(std::ostream& os, const T& first, const Ts&... rest) {
    detail::csv_field(os, first);
    ((os << ',', detail::csv_field(os, rest)), ...);
    os << '\n';
}

}  // namespace dbubble
