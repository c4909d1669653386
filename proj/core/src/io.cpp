#include "hjreach/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace hjreach {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

bool RunConfig::operator==(const RunConfig& other) const {
  return schema_version == other.schema_version && system.hash() == other.system.hash() && train == other.train &&
         verify == other.verify && grid == other.grid && slice == other.slice && out_dir == other.out_dir &&
         log_file == other.log_file;
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ContractError("config: '" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ContractError("config: unknown key '" + where + "." + item.key() + "'");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ContractError("config: bad value for '" + where + "." + key + "': " + e.what());
  }
}

std::vector<double> to_list(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd read_vector(const json& obj, const char* key, Eigen::Index size, const std::string& where) {
  std::vector<double> values;
  read_opt(obj, key, values, where);
  if (static_cast<Eigen::Index>(values.size()) != size) {
    throw ContractError("config: '" + where + "." + key + "' needs " + std::to_string(size) + " entries");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), size);
}

json system_to_json(const SystemSpec& s) {
  json obstacles = json::array();
  for (const auto& o : s.obstacles) obstacles.push_back({o.cx, o.cy, o.radius});
  return {{"name", s.name},
          {"mode", std::string(to_string(s.mode))},
          {"horizon", s.horizon},
          {"domain_lo", to_list(s.domain_lo)},
          {"domain_hi", to_list(s.domain_hi)},
          {"control_lo", to_list(s.control_lo)},
          {"control_hi", to_list(s.control_hi)},
          {"params", s.params},
          {"obstacles", obstacles}};
}

SystemSpec system_from_json(const json& j) {
  reject_unknown(j, {"name", "mode", "horizon", "domain_lo", "domain_hi", "control_lo", "control_hi", "params",
                     "obstacles"},
                 "system");
  if (!j.contains("name")) throw ContractError("config: missing required key 'system.name'");
  SystemSpec s = default_spec(j.at("name").get<std::string>());
  if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
  read_opt(j, "horizon", s.horizon, "system");
  if (j.contains("domain_lo")) s.domain_lo = read_vector(j, "domain_lo", s.state_dim, "system");
  if (j.contains("domain_hi")) s.domain_hi = read_vector(j, "domain_hi", s.state_dim, "system");
  if (j.contains("control_lo")) s.control_lo = read_vector(j, "control_lo", s.control_dim, "system");
  if (j.contains("control_hi")) s.control_hi = read_vector(j, "control_hi", s.control_dim, "system");
  if (j.contains("params")) {
    reject_unknown(j.at("params"), [&] {
      std::set<std::string> keys;
      for (const auto& kv : s.params) keys.insert(kv.first);
      return keys;
    }(), "system.params");
    for (const auto& item : j.at("params").items()) s.params[item.key()] = item.value().get<double>();
  }
  if (j.contains("obstacles")) {
    s.obstacles.clear();
    for (const auto& o : j.at("obstacles")) {
      const auto v = o.get<std::vector<double>>();
      if (v.size() != 3) throw ContractError("config: obstacles are [cx, cy, radius] triples");
      s.obstacles.push_back({v[0], v[1], v[2]});
    }
  }
  s.validate();
  return s;
}

json train_to_json(const TrainConfig& t) {
  return {{"variant", std::string(to_string(t.variant))},
          {"iters", t.iters},
          {"pretrain_iters", t.pretrain_iters},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"lambda", t.lambda},
          {"adaptive_lambda", t.adaptive_lambda},
          {"lambda_update_every", t.lambda_update_every},
          {"curriculum_fraction", t.curriculum_fraction},
          {"seed", t.seed},
          {"precision", std::string(to_string(t.precision))},
          {"terminal_fraction", t.terminal_fraction},
          {"reset_fraction", t.reset_fraction},
          {"hidden_width", t.hidden_width},
          {"hidden_layers", t.hidden_layers},
          {"omega0", t.omega0},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps},
          {"deterministic", t.deterministic},
          {"sample_lo", t.sample_lo},
          {"sample_hi", t.sample_hi}};
}

TrainConfig train_from_json(const json& j) {
  reject_unknown(j, {"variant", "iters", "pretrain_iters", "batch_size", "lr", "lambda", "adaptive_lambda",
                     "lambda_update_every", "curriculum_fraction", "seed", "precision", "terminal_fraction",
                     "reset_fraction", "hidden_width", "hidden_layers", "omega0", "adam_beta1", "adam_beta2",
                     "adam_eps", "deterministic", "sample_lo", "sample_hi"},
                 "train");
  TrainConfig t;
  if (j.contains("variant")) t.variant = parse_variant(j.at("variant").get<std::string>());
  if (j.contains("precision")) t.precision = parse_precision(j.at("precision").get<std::string>());
  read_opt(j, "iters", t.iters, "train");
  read_opt(j, "pretrain_iters", t.pretrain_iters, "train");
  read_opt(j, "batch_size", t.batch_size, "train");
  read_opt(j, "lr", t.lr, "train");
  read_opt(j, "lambda", t.lambda, "train");
  read_opt(j, "adaptive_lambda", t.adaptive_lambda, "train");
  read_opt(j, "lambda_update_every", t.lambda_update_every, "train");
  read_opt(j, "curriculum_fraction", t.curriculum_fraction, "train");
  read_opt(j, "seed", t.seed, "train");
  read_opt(j, "terminal_fraction", t.terminal_fraction, "train");
  read_opt(j, "reset_fraction", t.reset_fraction, "train");
  read_opt(j, "hidden_width", t.hidden_width, "train");
  read_opt(j, "hidden_layers", t.hidden_layers, "train");
  read_opt(j, "omega0", t.omega0, "train");
  read_opt(j, "adam_beta1", t.adam_beta1, "train");
  read_opt(j, "adam_beta2", t.adam_beta2, "train");
  read_opt(j, "adam_eps", t.adam_eps, "train");
  read_opt(j, "deterministic", t.deterministic, "train");
  read_opt(j, "sample_lo", t.sample_lo, "train");
  read_opt(j, "sample_hi", t.sample_hi, "train");
  t.validate();
  return t;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(j, {"schema_version", "system", "train", "verify", "grid", "slice", "output"}, "");
  if (!j.contains("schema_version")) throw ContractError("config: missing required key 'schema_version'");
  if (!j.contains("system")) throw ContractError("config: missing required key 'system'");
  RunConfig cfg;
  cfg.schema_version = j.at("schema_version").get<int>();
  if (cfg.schema_version != kConfigSchemaVersion) {
    throw ContractError("config: schema_version " + std::to_string(cfg.schema_version) + " is not supported (expected " +
                        std::to_string(kConfigSchemaVersion) + ")");
  }
  cfg.system = system_from_json(j.at("system"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  if (j.contains("verify")) {
    const json& v = j.at("verify");
    reject_unknown(v, {"epsilon", "calib_samples", "volume_samples", "seed", "rollout_dt"}, "verify");
    read_opt(v, "epsilon", cfg.verify.epsilon, "verify");
    read_opt(v, "calib_samples", cfg.verify.calib_samples, "verify");
    read_opt(v, "volume_samples", cfg.verify.volume_samples, "verify");
    read_opt(v, "seed", cfg.verify.seed, "verify");
    read_opt(v, "rollout_dt", cfg.verify.rollout_dt, "verify");
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown(g, {"nodes", "cfl", "snapshot_every"}, "grid");
    read_opt(g, "nodes", cfg.grid.nodes, "grid");
    read_opt(g, "cfl", cfg.grid.cfl, "grid");
    read_opt(g, "snapshot_every", cfg.grid.snapshot_every, "grid");
  }
  if (j.contains("slice")) {
    const json& s = j.at("slice");
    reject_unknown(s, {"dims", "fixed", "resolution", "time", "delta"}, "slice");
    if (s.contains("dims")) {
      const auto dims = s.at("dims").get<std::vector<int>>();
      if (dims.size() != 2) throw ContractError("config: 'slice.dims' needs two entries");
      cfg.slice.dim_a = dims[0];
      cfg.slice.dim_b = dims[1];
    }
    read_opt(s, "fixed", cfg.slice.fixed, "slice");
    read_opt(s, "resolution", cfg.slice.resolution, "slice");
    read_opt(s, "time", cfg.slice.time, "slice");
    read_opt(s, "delta", cfg.slice.delta, "slice");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    reject_unknown(o, {"dir", "log"}, "output");
    read_opt(o, "dir", cfg.out_dir, "output");
    read_opt(o, "log", cfg.log_file, "output");
  }
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["system"] = system_to_json(cfg.system);
  j["train"] = train_to_json(cfg.train);
  j["verify"] = {{"epsilon", cfg.verify.epsilon},
                 {"calib_samples", cfg.verify.calib_samples},
                 {"volume_samples", cfg.verify.volume_samples},
                 {"seed", cfg.verify.seed},
                 {"rollout_dt", cfg.verify.rollout_dt}};
  j["grid"] = {{"nodes", cfg.grid.nodes}, {"cfl", cfg.grid.cfl}, {"snapshot_every", cfg.grid.snapshot_every}};
  j["slice"] = {{"dims", {cfg.slice.dim_a, cfg.slice.dim_b}},
                {"fixed", cfg.slice.fixed},
                {"resolution", cfg.slice.resolution},
                {"time", cfg.slice.time},
                {"delta", cfg.slice.delta}};
  j["output"] = {{"dir", cfg.out_dir}, {"log", cfg.log_file}};
  return j.dump(2) + "\n";
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

void save_config(const std::filesystem::path& path, const RunConfig& cfg) { write_file(path, serialize_config(cfg)); }

// ---------------------------------------------------------------------------
// Binary framing

namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) { buf_.append(static_cast<const char*>(data), n); }
  template <typename T>
  void le(T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<char>(u & 0xFF));
      u = static_cast<U>(u >> 8);
    }
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void finish() { le(fnv1a64(buf_.data(), buf_.size())); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, const char* what) : data_(data), what_(what) {}

  void need(std::size_t n) const {
    if (pos_ + n > end_) throw ChecksumError(std::string(what_) + ": file is truncated");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u = static_cast<U>(u | static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  // Verifies magic and trailing checksum, then positions after the magic.
  void open(const char magic[4]) {
    if (data_.size() < 12) throw ChecksumError(std::string(what_) + ": file is truncated");
    if (std::memcmp(data_.data(), magic, 4) != 0) throw ChecksumError(std::string(what_) + ": bad magic");
    end_ = data_.size();
    pos_ = end_ - 8;
    const auto stored = le<std::uint64_t>();
    end_ -= 8;
    if (stored != fnv1a64(data_.data(), end_)) throw ChecksumError(std::string(what_) + ": checksum mismatch");
    pos_ = 4;
  }
  void done() const {
    if (pos_ != end_) throw ChecksumError(std::string(what_) + ": trailing bytes before checksum");
  }

 private:
  const std::string& data_;
  const char* what_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

std::uint8_t variant_tag(Variant v) { return static_cast<std::uint8_t>(v); }
std::uint8_t precision_tag(Precision p) { return static_cast<std::uint8_t>(p); }

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.params.validate();
  Writer w;
  w.bytes("HJRC", 4);
  w.le<std::uint32_t>(kCheckpointVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.system.size()));
  w.bytes(ckpt.system.data(), ckpt.system.size());
  w.le<std::uint64_t>(ckpt.system_hash);
  w.le<std::uint8_t>(variant_tag(ckpt.variant));
  w.le<std::uint8_t>(precision_tag(ckpt.precision));
  w.f64(ckpt.params.omega0);
  w.le<std::int64_t>(ckpt.iteration);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.layer_sizes.size()));
  for (int s : ckpt.params.layer_sizes) w.le<std::uint32_t>(static_cast<std::uint32_t>(s));
  const std::vector<double> flat = ckpt.params.flatten();
  w.le<std::uint64_t>(flat.size());
  for (double v : flat) w.f64(v);
  w.finish();
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes, "checkpoint");
  r.open("HJRC");
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw ChecksumError("checkpoint: format version " + std::to_string(version) + " is not supported");
  }
  Checkpoint c;
  c.system = r.str(r.le<std::uint32_t>());
  c.system_hash = r.le<std::uint64_t>();
  const auto variant = r.le<std::uint8_t>();
  const auto precision = r.le<std::uint8_t>();
  if (variant > 2 || precision > 1) throw ChecksumError("checkpoint: bad variant or precision tag");
  c.variant = static_cast<Variant>(variant);
  c.precision = static_cast<Precision>(precision);
  c.params.omega0 = r.f64();
  c.iteration = r.le<std::int64_t>();
  const auto layers = r.le<std::uint32_t>();
  if (layers < 2 || layers > 64) throw ChecksumError("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < layers; ++i) c.params.layer_sizes.push_back(static_cast<int>(r.le<std::uint32_t>()));
  const auto count = r.le<std::uint64_t>();
  r.need(count * 8);
  std::vector<double> flat(count);
  for (auto& v : flat) v = r.f64();
  r.done();
  std::size_t expected = 0;
  for (std::size_t l = 0; l + 1 < c.params.layer_sizes.size(); ++l) {
    expected += static_cast<std::size_t>(c.params.layer_sizes[l + 1]) * (c.params.layer_sizes[l] + 1);
  }
  if (expected != count) throw ChecksumError("checkpoint: parameter count does not match the layer sizes");
  c.params.weights.clear();
  c.params.biases.clear();
  for (std::size_t l = 0; l + 1 < c.params.layer_sizes.size(); ++l) {
    c.params.weights.emplace_back(c.params.layer_sizes[l + 1], c.params.layer_sizes[l]);
    c.params.biases.emplace_back(c.params.layer_sizes[l + 1]);
  }
  c.params.unflatten(flat);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

std::string encode_field(const GridField& field) {
  field.validate();
  const Grid& g = field.grid;
  Writer w;
  w.bytes("HJRG", 4);
  w.le<std::uint32_t>(1);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(g.dims));
  for (int d = 0; d < g.dims; ++d) {
    w.f64(g.mins(d));
    w.f64(g.maxs(d));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(g.counts[static_cast<std::size_t>(d)]));
    w.le<std::uint8_t>(g.periodic[static_cast<std::size_t>(d)] ? 1 : 0);
  }
  w.f64(field.time_label);
  for (double v : field.values) w.f64(v);
  w.finish();
  return w.take();
}

GridField decode_field(const std::string& bytes) {
  Reader r(bytes, "grid field");
  r.open("HJRG");
  if (r.le<std::uint32_t>() != 1) throw ChecksumError("grid field: unsupported format version");
  const auto dims = static_cast<int>(r.le<std::uint32_t>());
  if (dims < 1 || dims > 3) throw ChecksumError("grid field: bad dimension count");
  Eigen::VectorXd mins(dims), maxs(dims);
  std::vector<int> counts;
  std::vector<bool> periodic;
  for (int d = 0; d < dims; ++d) {
    mins(d) = r.f64();
    maxs(d) = r.f64();
    counts.push_back(static_cast<int>(r.le<std::uint32_t>()));
    periodic.push_back(r.le<std::uint8_t>() != 0);
  }
  GridField field;
  field.grid = Grid::uniform(mins, maxs, counts, periodic);
  field.time_label = r.f64();
  r.need(field.grid.size() * 8);
  field.values.resize(field.grid.size());
  for (auto& v : field.values) v = r.f64();
  r.done();
  return field;
}

void save_field(const std::filesystem::path& path, const GridField& field) { write_file(path, encode_field(field)); }

GridField load_field(const std::filesystem::path& path) { return decode_field(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Slices

namespace {

void check_slice(const System& sys, const SliceSpec& slice) {
  const int n = sys.state_dim();
  if (slice.dim_a == slice.dim_b) throw ContractError("slice: free dimensions must be distinct");
  if (slice.dim_a < 0 || slice.dim_a >= n || slice.dim_b < 0 || slice.dim_b >= n) {
    throw ContractError("slice: free dimension out of range");
  }
  if (n > 2 && static_cast<int>(slice.fixed.size()) != n) {
    throw ContractError("slice: 'fixed' needs " + std::to_string(n) + " entries");
  }
  if (slice.resolution < 2) throw ContractError("slice: resolution must be at least 2");
  if (slice.delta < 0.0) throw ContractError("slice: delta must be non-negative");
}

void put_row(std::ostream& out, double a, double b, double v, double l, bool safe) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d\n", a, b, v, l, safe ? 1 : 0);
  out << buf;
}

}  // namespace

void export_slice(std::ostream& out, const ValueFunction& model, const SliceSpec& slice) {
  const System& sys = model.system();
  check_slice(sys, slice);
  const auto names = sys.state_names();
  out << names[static_cast<std::size_t>(slice.dim_a)] << ',' << names[static_cast<std::size_t>(slice.dim_b)]
      << ",V,l,safe\n";
  const auto& s = sys.spec();
  const int res = slice.resolution;
  StateVec base = StateVec::Zero(sys.state_dim());
  for (int d = 0; d < sys.state_dim() && d < static_cast<int>(slice.fixed.size()); ++d) {
    base(d) = slice.fixed[static_cast<std::size_t>(d)];
  }
  const auto coord = [&](int dim, int i) {
    return s.domain_lo(dim) + (s.domain_hi(dim) - s.domain_lo(dim)) * i / (res - 1);
  };
  Eigen::MatrixXd states(sys.state_dim(), res);
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      states.col(j) = base;
      states(slice.dim_a, j) = coord(slice.dim_a, i);
      states(slice.dim_b, j) = coord(slice.dim_b, j);
    }
    const Eigen::VectorXd v = model.values(states, slice.time);
    for (int j = 0; j < res; ++j) {
      const double l = sys.target(sys.canonicalize(states.col(j)));
      put_row(out, states(slice.dim_a, j), states(slice.dim_b, j), v(j), l, is_safe(sys.mode(), v(j), slice.delta));
    }
  }
}

void export_slice(std::ostream& out, const System& sys, const GridField& field, const SliceSpec& slice) {
  check_slice(sys, slice);
  if (field.grid.dims != sys.state_dim()) throw ContractError("slice: field and system dimensions differ");
  const Grid& g = field.grid;
  const auto names = sys.state_names();
  out << names[static_cast<std::size_t>(slice.dim_a)] << ',' << names[static_cast<std::size_t>(slice.dim_b)]
      << ",V,l,safe\n";
  std::vector<int> idx(static_cast<std::size_t>(g.dims), 0);
  StateVec x(g.dims);
  for (int d = 0; d < g.dims && d < static_cast<int>(slice.fixed.size()); ++d) x(d) = slice.fixed[static_cast<std::size_t>(d)];
  const bool on_nodes = g.dims == 2;
  for (int i = 0; i < g.counts[static_cast<std::size_t>(slice.dim_a)]; ++i) {
    for (int j = 0; j < g.counts[static_cast<std::size_t>(slice.dim_b)]; ++j) {
      idx[static_cast<std::size_t>(slice.dim_a)] = i;
      idx[static_cast<std::size_t>(slice.dim_b)] = j;
      x(slice.dim_a) = g.coordinate(slice.dim_a, i);
      x(slice.dim_b) = g.coordinate(slice.dim_b, j);
      const double v = on_nodes ? field.values[g.flat_index(idx)] : field.interpolate(x);
      put_row(out, x(slice.dim_a), x(slice.dim_b), v, sys.target(x), is_safe(sys.mode(), v, slice.delta));
    }
  }
}

}  // namespace hjreach
