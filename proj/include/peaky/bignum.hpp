#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace peaky {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline double to_double(const BigRat& r) { return r.convert_to<double>(); }
inline double to_double(const BigInt& i) { return i.convert_to<double>(); }

}  // namespace peaky
