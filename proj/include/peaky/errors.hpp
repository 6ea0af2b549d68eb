#pragma once

#include <stdexcept>
#include <string>

namespace peaky {

/// The topology admits no alignment of the requested length.
struct NoAlignmentError : std::runtime_error {
  explicit NoAlignmentError(const std::string& what) : std::runtime_error(what) {}
};

/// Alignments exist but every path has zero probability mass, so occupancies
/// are undefined.
struct ZeroPathMassError : std::runtime_error {
  explicit ZeroPathMassError(const std::string& what) : std::runtime_error(what) {}
};

/// A prior assigns zero mass to a label the topology can reach, so the
/// ratio scores are undefined. Distinct from misuse errors: training treats
/// this as a degenerate (diverged) run.
struct ZeroPriorError : std::runtime_error {
  explicit ZeroPriorError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace peaky
