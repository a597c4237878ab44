#ifndef STBA_BAL_IO_HPP_
#define STBA_BAL_IO_HPP_

#include <filesystem>
#include <iosfwd>

#include "stba/problem.hpp"

namespace stba {

/// Reads the "Bundle Adjustment in the Large" text format:
///
///   m n q
///   q lines:  cam_idx pt_idx u v
///   m blocks: 9 numbers (rx ry rz tx ty tz f k1 k2)
///   n blocks: 3 numbers (X Y Z)
///
/// Tokens may be separated by arbitrary whitespace. Throws ParseError on
/// malformed text and InvalidProblem when the content violates a problem
/// invariant that ingestion does not repair.
BundleProblem read_bal(std::istream& in, const IngestOptions& options = {},
                       IngestReport* report = nullptr);
BundleProblem read_bal(const std::filesystem::path& path, const IngestOptions& options = {},
                       IngestReport* report = nullptr);

/// Writes the problem in BAL layout with 17 significant digits per value,
/// so read_bal(write_bal(p)) reproduces every double exactly.
void write_bal(std::ostream& out, const BundleProblem& problem);
void write_bal(const std::filesystem::path& path, const BundleProblem& problem);

}  // namespace stba

#endif  // STBA_BAL_IO_HPP_
