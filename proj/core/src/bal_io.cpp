#include "stba/bal_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "stba/errors.hpp"

namespace stba {

namespace {

// Whitespace tokenizer over an in-memory buffer.
class TokenReader {
 public:
  explicit TokenReader(std::string text) : text_(std::move(text)) {}

  std::string_view next(const char* what) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) {
      throw ParseError(std::string("unexpected end of input while reading ") + what);
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string_view(text_).substr(start, pos_ - start);
  }

  long long integer(const char* what) {
    const std::string_view token = next(what);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError("expected integer for " + std::string(what) + ", got '" +
                       std::string(token) + "'");
    }
    return value;
  }

  double real(const char* what) {
    const std::string_view token = next(what);
    // strtod keeps the round trip exact; from_chars for double is missing in
    // some standard libraries.
    const std::string owned(token);
    char* end = nullptr;
    const double value = std::strtod(owned.c_str(), &end);
    if (end != owned.c_str() + owned.size()) {
      throw ParseError("expected number for " + std::string(what) + ", got '" + owned + "'");
    }
    return value;
  }

  bool at_end() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return pos_ >= text_.size();
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
};

void put(std::ostream& out, double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  out << buffer;
}

}  // namespace

BundleProblem read_bal(std::istream& in, const IngestOptions& options, IngestReport* report) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  TokenReader reader(std::move(text));

  const long long m = reader.integer("camera count");
  const long long n = reader.integer("point count");
  const long long q = reader.integer("observation count");
  if (m < 0 || n < 0 || q < 0) throw ParseError("negative count in BAL header");

  std::vector<Observation> observations(static_cast<std::size_t>(q));
  for (auto& o : observations) {
    const long long cam = reader.integer("camera index");
    const long long pt = reader.integer("point index");
    if (cam < 0 || cam >= m || pt < 0 || pt >= n) {
      throw InvalidProblem("observation index out of range");
    }
    o.camera = static_cast<int>(cam);
    o.point = static_cast<int>(pt);
    o.pixel.x() = reader.real("pixel u");
    o.pixel.y() = reader.real("pixel v");
  }
  std::vector<Camera> cameras(static_cast<std::size_t>(m));
  for (auto& c : cameras) {
    for (int k = 0; k < 3; ++k) c.rotation[k] = reader.real("camera rotation");
    for (int k = 0; k < 3; ++k) c.translation[k] = reader.real("camera translation");
    c.focal = reader.real("focal length");
    c.distortion[0] = reader.real("k1");
    c.distortion[1] = reader.real("k2");
  }
  std::vector<Point3D> points(static_cast<std::size_t>(n));
  for (auto& p : points) {
    for (int k = 0; k < 3; ++k) p.position[k] = reader.real("point coordinate");
  }
  if (!reader.at_end()) throw ParseError("trailing data after BAL content");

  return BundleProblem::ingest(std::move(cameras), std::move(points), std::move(observations),
                               options, report);
}

BundleProblem read_bal(const std::filesystem::path& path, const IngestOptions& options,
                       IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_bal(in, options, report);
}

void write_bal(std::ostream& out, const BundleProblem& problem) {
  out << problem.num_cameras() << ' ' << problem.num_points() << ' '
      << problem.num_observations() << '\n';
  for (const Observation& o : problem.observations()) {
    out << o.camera << ' ' << o.point << ' ';
    put(out, o.pixel.x());
    out << ' ';
    put(out, o.pixel.y());
    out << '\n';
  }
  const auto line = [&out](double value) {
    put(out, value);
    out << '\n';
  };
  for (const Camera& c : problem.cameras()) {
    for (int k = 0; k < 3; ++k) line(c.rotation[k]);
    for (int k = 0; k < 3; ++k) line(c.translation[k]);
    line(c.focal);
    line(c.distortion[0]);
    line(c.distortion[1]);
  }
  for (const Point3D& p : problem.points()) {
    for (int k = 0; k < 3; ++k) line(p.position[k]);
  }
}

void write_bal(const std::filesystem::path& path, const BundleProblem& problem) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_bal(out, problem);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace stba
