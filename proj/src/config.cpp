#include "config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace maskgan {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "'");
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  if (key == "seed") seed = std::stoull(value);
  else if (key == "vocab_max") vocab_max = std::stoi(value);
  else if (key == "max_len") max_len = std::stoi(value);
  else if (key == "embed") embed = std::stoi(value);
  else if (key == "hidden") hidden = std::stoi(value);
  else if (key == "layers") layers = std::stoi(value);
  else if (key == "dropout") dropout = std::stod(value);
  else if (key == "share_gd_embeddings") share_gd_embeddings = parse_bool(value);
  else if (key == "beta1") beta1 = std::stod(value);
  else if (key == "beta2") beta2 = std::stod(value);
  else if (key == "adam_eps") adam_eps = std::stod(value);
  else if (key == "clip_norm") clip_norm = std::stod(value);
  else if (key == "lm_lr") lm_lr = std::stod(value);
  else if (key == "infill_lr") infill_lr = std::stod(value);
  else if (key == "g_lr") g_lr = std::stod(value);
  else if (key == "d_lr") d_lr = std::stod(value);
  else if (key == "c_lr") c_lr = std::stod(value);
  else if (key == "batch_size") batch_size = std::stoi(value);
  else if (key == "lm_epochs") lm_epochs = std::stoi(value);
  else if (key == "infill_epochs") infill_epochs = std::stoi(value);
  else if (key == "d_pretrain_steps") d_pretrain_steps = std::stoi(value);
  else if (key == "gan_iters") gan_iters = std::stoi(value);
  else if (key == "gamma") gamma = std::stod(value);
  else if (key == "mask_rate") mask_rate = std::stod(value);
  else if (key == "mask_regime") {
    if (value == "contiguous") mask_regime = MaskRegime::kContiguous;
    else if (value == "bernoulli") mask_regime = MaskRegime::kBernoulli;
    else throw std::invalid_argument("config: bad mask_regime '" + value + "'");
  } else if (key == "d_steps_per_g") d_steps_per_g = std::stoi(value);
  else if (key == "reward_scope") {
    if (value == "masked-only") reward_scope = RewardScope::kMaskedOnly;
    else if (value == "all-positions") reward_scope = RewardScope::kAllPositions;
    else throw std::invalid_argument("config: bad reward_scope '" + value + "'");
  } else if (key == "full_vocab_rewards") full_vocab_rewards = parse_bool(value);
  else if (key == "curriculum") curriculum = parse_bool(value);
  else if (key == "curriculum_threshold") curriculum_threshold = std::stod(value);
  else if (key == "curriculum_window") curriculum_window = std::stoi(value);
  else if (key == "val_fraction") val_fraction = std::stod(value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' at line " +
                               std::to_string(lineno));
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate();
}

std::string Config::to_key_values() const {
  std::ostringstream out;
  out << "seed=" << seed << '\n'
      << "vocab_max=" << vocab_max << '\n'
      << "max_len=" << max_len << '\n'
      << "embed=" << embed << '\n'
      << "hidden=" << hidden << '\n'
      << "layers=" << layers << '\n'
      << "dropout=" << dropout << '\n'
      << "share_gd_embeddings=" << (share_gd_embeddings ? "true" : "false")
      << '\n'
      << "beta1=" << beta1 << '\n'
      << "beta2=" << beta2 << '\n'
      << "adam_eps=" << adam_eps << '\n'
      << "clip_norm=" << clip_norm << '\n'
      << "lm_lr=" << lm_lr << '\n'
      << "infill_lr=" << infill_lr << '\n'
      << "g_lr=" << g_lr << '\n'
      << "d_lr=" << d_lr << '\n'
      << "c_lr=" << c_lr << '\n'
      << "batch_size=" << batch_size << '\n'
      << "lm_epochs=" << lm_epochs << '\n'
      << "infill_epochs=" << infill_epochs << '\n'
      << "d_pretrain_steps=" << d_pretrain_steps << '\n'
      << "gan_iters=" << gan_iters << '\n'
      << "gamma=" << gamma << '\n'
      << "mask_rate=" << mask_rate << '\n'
      << "mask_regime="
      << (mask_regime == MaskRegime::kContiguous ? "contiguous" : "bernoulli")
      << '\n'
      << "d_steps_per_g=" << d_steps_per_g << '\n'
      << "reward_scope="
      << (reward_scope == RewardScope::kMaskedOnly ? "masked-only"
                                                   : "all-positions")
      << '\n'
      << "full_vocab_rewards=" << (full_vocab_rewards ? "true" : "false")
      << '\n'
      << "curriculum=" << (curriculum ? "true" : "false") << '\n'
      << "curriculum_threshold=" << curriculum_threshold << '\n'
      << "curriculum_window=" << curriculum_window << '\n'
      << "val_fraction=" << val_fraction << '\n';
  return out.str();
}

void Config::validate() const {
  auto req = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + msg);
  };
  req(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0,1]");
  req(mask_rate >= 0.0 && mask_rate <= 1.0, "mask_rate must be in [0,1]");
  req(d_steps_per_g >= 1, "d_steps_per_g must be >= 1");
  req(lm_lr > 0 && infill_lr > 0 && g_lr > 0 && d_lr > 0 && c_lr > 0,
      "learning rates must be positive");
  req(vocab_max >= kNumSpecials + 1, "vocab_max must be >= 5");
  req(max_len >= 1, "max_len must be >= 1");
  req(embed == hidden, "embed must equal hidden (tied softmax)");
  req(layers >= 1, "layers must be >= 1");
  req(batch_size >= 1, "batch_size must be >= 1");
  req(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0,1)");
  req(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction in [0,1)");
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << "version=" << version << '\n';
  out << "stage=" << stage << '\n';
  for (const auto& c : checkpoints) out << "checkpoint=" << c << '\n';
  out << config.to_key_values();
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot read " + path);
  RunManifest m;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "version") m.version = value;
    else if (key == "stage") m.stage = value;
    else if (key == "checkpoint") m.checkpoints.push_back(value);
    else m.config.set(key, value);
  }
  return m;
}

}  // namespace maskgan
