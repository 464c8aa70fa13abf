#pragma once

#include <boost/rational.hpp>
#include <string>

namespace slt {

// Exact rational arithmetic for threshold values. Magnitudes stay tiny
// (denominators divide 8), so long long never overflows here.
using Rat = boost::rational<long long>;

inline Rat rat(long long num, long long den = 1) { return Rat(num, den); }

inline double to_double(const Rat& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// "13/2" for proper fractions, plain "2" for integers.
inline std::string to_string(const Rat& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace slt
