#include "robodiff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace robodiff {

namespace {
constexpr const char* kMagic = "robodiff-ckpt 1";

std::string fmt_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void put_f32_le(std::ostream& out, float f) {
  const std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  const char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                     static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
  out.write(b, 4);
}

float get_f32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated parameter data");
  const std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                          (static_cast<std::uint32_t>(b[2]) << 16) |
                          (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(u);
}

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw std::runtime_error("checkpoint " + path + ": " + why);
}
}  // namespace

void save_checkpoint(const std::string& path, const Backbone& net, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  const BlockConfig& c = meta.cfg;
  out << kMagic << '\n'
      << "n_blocks = " << c.n_blocks << '\n'
      << "width = " << c.width << '\n'
      << "cond_width = " << c.cond_width << '\n'
      << "mask_classes = " << c.mask_classes << '\n'
      << "use_mask = " << (c.use_mask ? 1 : 0) << '\n'
      << "use_pose = " << (c.use_pose ? 1 : 0) << '\n'
      << "freq_pairs = " << c.freq_pairs << '\n'
      << "expansion = " << c.expansion << '\n'
      << "T = " << meta.T << '\n'
      << "beta_start = " << fmt_real(meta.beta_start) << '\n'
      << "beta_end = " << fmt_real(meta.beta_end) << '\n'
      << "params = " << net.params().size() << '\n'
      << "end\n";
  const ParamStore& store = net.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Param& p = store.at(i);
    out << p.name;
    for (int d : p.shape) out << ' ' << d;
    out << '\n';
    for (double v : p.value) put_f32_le(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) bad(path, "bad magic line");

  CheckpointMeta meta;
  std::size_t n_params = 0;
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) bad(path, "malformed header line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 3);
    try {
      if (key == "n_blocks") meta.cfg.n_blocks = std::stoi(val);
      else if (key == "width") meta.cfg.width = std::stoi(val);
      else if (key == "cond_width") meta.cfg.cond_width = std::stoi(val);
      else if (key == "mask_classes") meta.cfg.mask_classes = std::stoi(val);
      else if (key == "use_mask") meta.cfg.use_mask = std::stoi(val) != 0;
      else if (key == "use_pose") meta.cfg.use_pose = std::stoi(val) != 0;
      else if (key == "freq_pairs") meta.cfg.freq_pairs = std::stoi(val);
      else if (key == "expansion") meta.cfg.expansion = std::stoi(val);
      else if (key == "T") meta.T = std::stoi(val);
      else if (key == "beta_start") meta.beta_start = std::stod(val);
      else if (key == "beta_end") meta.beta_end = std::stod(val);
      else if (key == "params") n_params = static_cast<std::size_t>(std::stoul(val));
      else bad(path, "unknown header key: " + key);
    } catch (const std::invalid_argument&) {
      bad(path, "unparseable value for " + key);
    }
  }
  if (!saw_end) bad(path, "missing end marker");

  LoadedCheckpoint lc;
  lc.meta = meta;
  lc.net = std::make_unique<Backbone>(meta.cfg);
  ParamStore& store = lc.net->params();
  if (n_params != store.size()) bad(path, "parameter count does not match the config");
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store.at(i);
    if (!std::getline(in, line)) bad(path, "truncated before parameter " + p.name);
    std::istringstream hs(line);
    std::string name;
    hs >> name;
    if (name != p.name) bad(path, "expected parameter " + p.name + ", found " + name);
    std::vector<int> shape;
    int d;
    while (hs >> d) shape.push_back(d);
    if (shape != p.shape) bad(path, "shape mismatch for " + p.name);
    for (double& v : p.value) v = static_cast<double>(get_f32_le(in));
  }
  return lc;
}

std::string file_fnv1a64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path + " for hashing");
  std::uint64_t h = 1469598103934665603ull;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace robodiff
