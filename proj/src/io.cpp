#include "hwall/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

namespace hwall {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void LongTable::add(double N, std::string parameter, std::string observable, double value,
                    double se) {
  rows_.push_back({N, std::move(parameter), std::move(observable), value, se});
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void LongTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "N,parameter,observable,value,se\n";
  for (const Row& r : rows_) {
    out << format_double(r.N) << ',' << csv_field(r.parameter) << ',' << csv_field(r.observable)
        << ',' << format_double(r.value) << ',' << format_double(r.se) << '\n';
  }
}

FrameWriter::FrameWriter(const std::filesystem::path& path, std::uint64_t frame_length)
    : out_(path, std::ios::binary), frame_length_(frame_length) {
  if (!out_) throw Error("cannot write " + path.string());
  char header[16];
  std::memcpy(header, kMagic, 4);
  for (int i = 0; i < 4; ++i) header[4 + i] = static_cast<char>((kVersion >> (8 * i)) & 0xff);
  for (int i = 0; i < 8; ++i) header[8 + i] = static_cast<char>((frame_length >> (8 * i)) & 0xff);
  out_.write(header, 16);
}

void FrameWriter::write(const Eigen::VectorXd& frame) {
  require(static_cast<std::uint64_t>(frame.size()) == frame_length_,
          "frames: frame length mismatch");
  static_assert(sizeof(double) == 8);
  for (Index i = 0; i < frame.size(); ++i) {
    std::uint64_t bits;
    const double v = frame[i];
    std::memcpy(&bits, &v, 8);
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
    out_.write(b, 8);
  }
  ++frames_;
}

std::vector<Eigen::VectorXd> read_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), 16);
  if (in.gcount() != 16 || std::memcmp(header, FrameWriter::kMagic, 4) != 0) {
    throw Error("frames: bad magic in " + path.string());
  }
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= std::uint32_t{header[4 + i]} << (8 * i);
  if (version != FrameWriter::kVersion) throw Error("frames: unsupported version");
  std::uint64_t length = 0;
  for (int i = 0; i < 8; ++i) length |= std::uint64_t{header[8 + i]} << (8 * i);
  std::vector<Eigen::VectorXd> frames;
  std::vector<unsigned char> buf(static_cast<std::size_t>(length) * 8);
  while (true) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() == 0) break;
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw Error("frames: truncated frame");
    Eigen::VectorXd f(static_cast<Index>(length));
    for (std::uint64_t i = 0; i < length; ++i) {
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= std::uint64_t{buf[8 * i + k]} << (8 * k);
      double v;
      std::memcpy(&v, &bits, 8);
      f[static_cast<Index>(i)] = v;
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void save_wall_csv(const std::filesystem::path& path, const LatticeDomain& domain,
                   const WallField& wall) {
  require(wall.size() == domain.size(), "save_wall: wall does not match the domain");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (int i = 0; i < domain.dim(); ++i) out << 'x' << i << ',';
  out << "value\n";
  for (Index s = 0; s < domain.size(); ++s) {
    for (int v : domain.site(s)) out << v << ',';
    out << format_double(wall.values[s]) << '\n';
  }
}

WallField load_wall_csv(const std::filesystem::path& path, const LatticeDomain& domain,
                        const WallSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open wall file " + path.string());
  std::string line;
  std::getline(in, line);
  std::map<Site, double> values;
  const int d = domain.dim();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Site x;
    double v = 0.0;
    for (int i = 0; i <= d; ++i) {
      if (!std::getline(ss, cell, ',')) throw Error("wall file: short row '" + line + "'");
      if (i < d) {
        x.push_back(std::stoi(cell));
      } else {
        v = std::stod(cell);
      }
    }
    values[x] = v;
  }
  WallField w;
  w.spec = spec;
  w.values.resize(domain.size());
  for (Index s = 0; s < domain.size(); ++s) {
    auto it = values.find(domain.site(s));
    if (it == values.end()) throw Error("wall file: missing site in " + path.string());
    w.values[s] = it->second;
  }
  return w;
}

namespace {

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from(const Json& j, int d, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    throw InvalidArgument(path + ": expected an array of " + std::to_string(d) + " numbers");
  }
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw InvalidArgument(path + ": expected numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

double number_at(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw InvalidArgument(path + "." + key + ": missing");
  if (!j[key].is_number()) throw InvalidArgument(path + "." + key + ": expected a number");
  return j[key].get<double>();
}

}  // namespace

Json to_json(const ShapeSpec& shape) {
  Json j;
  switch (shape.kind) {
    case ShapeSpec::Kind::box:
      j["kind"] = "box";
      j["sides"] = vec_json(shape.sides);
      break;
    case ShapeSpec::Kind::ball:
      j["kind"] = "ball";
      j["radius"] = shape.radius;
      break;
    case ShapeSpec::Kind::custom:
      j["kind"] = "custom";
      j["lower"] = vec_json(shape.lower);
      j["upper"] = vec_json(shape.upper);
      j["resolution"] = shape.resolution;
      j["mask"] = shape.mask;
      break;
  }
  j["center"] = vec_json(shape.center);
  return j;
}

ShapeSpec shape_from_json(const Json& j, int d, const std::string& path) {
  if (!j.is_object()) throw InvalidArgument(path + ": expected an object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw InvalidArgument(path + ".kind: missing");
  const std::string kind = j["kind"];
  const Eigen::VectorXd center =
      j.contains("center") ? vec_from(j["center"], d, path + ".center") : Eigen::VectorXd::Zero(d);
  try {
    if (kind == "box") return ShapeSpec::box(vec_from(j.at("sides"), d, path + ".sides"), center);
    if (kind == "ball") return ShapeSpec::ball(d, number_at(j, "radius", path), center);
    if (kind == "custom") {
      return ShapeSpec::custom(vec_from(j.at("lower"), d, path + ".lower"),
                               vec_from(j.at("upper"), d, path + ".upper"),
                               j.at("resolution").get<std::vector<int>>(),
                               j.at("mask").get<std::vector<std::uint8_t>>(), center);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    throw InvalidArgument(what.rfind(path, 0) == 0 ? what : path + ": " + what);
  }
  throw InvalidArgument(path + ".kind: unknown shape '" + kind + "'");
}

Json to_json(const WallSpec& spec) {
  Json j;
  j["family"] = family_name(spec.family);
  switch (spec.family) {
    case WallSpec::Family::gaussian:
    case WallSpec::Family::half_gaussian:
      j["Q"] = spec.Q;
      break;
    case WallSpec::Family::bounded:
      j["lo"] = spec.lo;
      j["hi"] = spec.hi;
      break;
    case WallSpec::Family::stretched:
      j["beta"] = spec.beta;
      j["Q"] = spec.Q;
      break;
    case WallSpec::Family::flat:
      j["c"] = spec.c;
      break;
  }
  return j;
}

WallSpec wall_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw InvalidArgument(path + ": expected an object");
  if (!j.contains("family") || !j["family"].is_string()) {
    throw InvalidArgument(path + ".family: missing");
  }
  WallSpec s;
  try {
    s.family = parse_family(j["family"]);
  } catch (const InvalidArgument&) {
    throw InvalidArgument(path + ".family: unknown family '" + j["family"].get<std::string>() + "'");
  }
  switch (s.family) {
    case WallSpec::Family::gaussian:
    case WallSpec::Family::half_gaussian:
      s.Q = number_at(j, "Q", path);
      if (!(s.Q > 0)) throw InvalidArgument(path + ".Q: must be > 0");
      break;
    case WallSpec::Family::bounded:
      s.lo = number_at(j, "lo", path);
      s.hi = number_at(j, "hi", path);
      if (s.lo > s.hi) throw InvalidArgument(path + ".lo: must be <= " + path + ".hi");
      break;
    case WallSpec::Family::stretched:
      s.beta = number_at(j, "beta", path);
      s.Q = number_at(j, "Q", path);
      if (!(s.beta > 0 && s.beta < 1)) throw InvalidArgument(path + ".beta: must lie in (0, 1)");
      if (!(s.Q > 0)) throw InvalidArgument(path + ".Q: must be > 0");
      break;
    case WallSpec::Family::flat:
      s.c = number_at(j, "c", path);
      break;
  }
  return s;
}

Json to_json(const CapacityEstimate& est) {
  Json j;
  j["method"] = method_name(est.method);
  j["shape"] = to_json(est.shape);
  j["value"] = est.value;
  j["mesh"] = est.mesh;
  Json hist = Json::array();
  for (const auto& [m, v] : est.refinement_history) hist.push_back(Json::array({m, v}));
  j["refinement_history"] = hist;
  j["converged"] = est.converged;
  if (est.method == CapacityEstimate::Method::primal) {
    j["box_radius"] = est.box_radius;
    j["box_coefficient"] = est.box_coefficient;
    j["unextrapolated"] = est.unextrapolated;
  }
  if (est.method == CapacityEstimate::Method::discrete) {
    j["se"] = est.se;
    j["raw_sum"] = est.raw_sum;
    j["raw_sum_se"] = est.raw_sum_se;
    j["kill_radius"] = est.kill_radius;
    j["return_correction"] = est.return_correction;
    j["calibration"] = est.calibration;
    j["walkers"] = est.walkers;
    j["boundary_sites"] = est.boundary_sites;
  }
  j["notes"] = est.notes;
  return j;
}

Json to_json(const DiagonalSeries& s) {
  Json j;
  j["d"] = s.d;
  j["value"] = s.value;
  j["error_bound"] = s.error_bound;
  j["terms"] = s.terms;
  j["partial_sum"] = s.partial_sum;
  j["tail_estimate"] = s.tail_estimate;
  j["lclt_constant"] = s.lclt_constant;
  j["lclt_tail_bound"] = s.lclt_tail_bound;
  j["remainder_constant"] = s.remainder_constant;
  return j;
}

Json to_json(const TailConstants& tc) {
  Json j;
  j["d"] = tc.d;
  j["G_diag"] = tc.G_diag;
  j["G_diag_error"] = tc.G_diag_error;
  j["R_d"] = tc.R_d;
  j["window"] = Json::array({tc.r_min, tc.r_max});
  j["points"] = tc.points;
  j["plateau_ratio"] = tc.plateau_ratio;
  j["residual_rms"] = tc.residual_rms;
  return j;
}

Json to_json(const ProbEstimate& p) {
  Json j;
  j["method"] = method_name(p.method);
  j["log_prob"] = p.log_prob;
  j["log_se"] = p.log_se;
  j["prob"] = p.prob;
  j["se"] = p.se;
  j["ess"] = p.ess;
  j["samples"] = p.samples;
  j["hits"] = p.hits;
  j["flagged"] = p.flagged;
  j["one_sided"] = p.one_sided;
  j["note"] = p.note;
  if (p.method == ProbEstimate::Method::importance) {
    j["tilted_hit_fraction"] = p.tilted_hit_fraction;
    j["shift_entropy"] = p.shift_entropy;
    j["weight_mean"] = p.weight_mean;
    j["weight_mean_se"] = p.weight_mean_se;
    j["psi_sha256"] = p.psi_hash;
  }
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

}  // namespace hwall
