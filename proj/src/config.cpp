#include "lemda/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lemda {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += xs[i];
  }
  return out;
}

std::string join_u64(const std::vector<std::uint64_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");

    if (key == "dataset") cfg.dataset = value;
    else if (key == "n_train") cfg.n_train = parse_int(key, value);
    else if (key == "n_val") cfg.n_val = parse_int(key, value);
    else if (key == "n_test") cfg.n_test = parse_int(key, value);
    else if (key == "num_classes") cfg.num_classes = parse_int(key, value);
    else if (key == "noise") cfg.noise = parse_double(key, value);
    else if (key == "data_seed") cfg.data_seed = parse_u64(key, value);
    else if (key == "ingest_path") cfg.ingest_path = value;
    else if (key == "label_col") cfg.label_col = value;
    else if (key == "numeric_cols") cfg.numeric_cols = split_list(value);
    else if (key == "text_cols") cfg.text_cols = split_list(value);
    else if (key == "categorical_cols") cfg.categorical_cols = split_list(value);
    else if (key == "max_len") cfg.max_len = parse_int(key, value);
    else if (key == "hidden") cfg.hidden = parse_int(key, value);
    else if (key == "emb_dim") cfg.emb_dim = parse_int(key, value);
    else if (key == "feature_dim") cfg.feature_dim = parse_int(key, value);
    else if (key == "augmentation") cfg.augmentation = value;
    else if (key == "w1") cfg.w1 = parse_double(key, value);
    else if (key == "w2") cfg.w2 = parse_double(key, value);
    else if (key == "w3") cfg.w3 = parse_double(key, value);
    else if (key == "alpha_conf") cfg.alpha_conf = parse_double(key, value);
    else if (key == "regularizer") cfg.regularizer = value;
    else if (key == "latent_dim") cfg.latent_dim = parse_int(key, value);
    else if (key == "vae_hidden") cfg.vae_hidden = parse_int(key, value);
    else if (key == "vae_dropout") cfg.vae_dropout = parse_double(key, value);
    else if (key == "attn_layers") cfg.attn_layers = parse_int(key, value);
    else if (key == "attn_heads") cfg.attn_heads = parse_int(key, value);
    else if (key == "attn_d_model") cfg.attn_d_model = parse_int(key, value);
    else if (key == "attn_ff") cfg.attn_ff = parse_int(key, value);
    else if (key == "attn_dropout") cfg.attn_dropout = parse_double(key, value);
    else if (key == "optimizer") cfg.optimizer = value;
    else if (key == "lr_f") cfg.lr_f = parse_double(key, value);
    else if (key == "lr_g") cfg.lr_g = parse_double(key, value);
    else if (key == "epochs") cfg.epochs = parse_int(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
    else if (key == "g_update_every") cfg.g_update_every = parse_int(key, value);
    else if (key == "early_stop_patience") cfg.early_stop_patience = parse_int(key, value);
    else if (key == "mixup_alpha") cfg.mixup_alpha = parse_double(key, value);
    else if (key == "mixgen_lambda") cfg.mixgen_lambda = parse_double(key, value);
    else if (key == "augment_modalities") cfg.augment_modalities = value;
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : split_list(value)) cfg.seeds.push_back(parse_u64(key, s));
    } else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "verbose_steps") cfg.verbose_steps = parse_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(line_no) + ")");
  }

  if (const char* env = std::getenv("LEMDA_OUT"); env != nullptr && env[0] != '\0') {
    cfg.output_dir = env;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "dataset = " << dataset << "\n";
  os << "n_train = " << n_train << "\n";
  os << "n_val = " << n_val << "\n";
  os << "n_test = " << n_test << "\n";
  os << "num_classes = " << num_classes << "\n";
  os << "noise = " << fmt_g(noise) << "\n";
  os << "data_seed = " << data_seed << "\n";
  os << "ingest_path = " << ingest_path << "\n";
  os << "label_col = " << label_col << "\n";
  os << "numeric_cols = " << join(numeric_cols) << "\n";
  os << "text_cols = " << join(text_cols) << "\n";
  os << "categorical_cols = " << join(categorical_cols) << "\n";
  os << "max_len = " << max_len << "\n";
  os << "hidden = " << hidden << "\n";
  os << "emb_dim = " << emb_dim << "\n";
  os << "feature_dim = " << feature_dim << "\n";
  os << "augmentation = " << augmentation << "\n";
  os << "w1 = " << fmt_g(w1) << "\n";
  os << "w2 = " << fmt_g(w2) << "\n";
  os << "w3 = " << fmt_g(w3) << "\n";
  os << "alpha_conf = " << fmt_g(alpha_conf) << "\n";
  os << "regularizer = " << regularizer << "\n";
  os << "latent_dim = " << latent_dim << "\n";
  os << "vae_hidden = " << vae_hidden << "\n";
  os << "vae_dropout = " << fmt_g(vae_dropout) << "\n";
  os << "attn_layers = " << attn_layers << "\n";
  os << "attn_heads = " << attn_heads << "\n";
  os << "attn_d_model = " << attn_d_model << "\n";
  os << "attn_ff = " << attn_ff << "\n";
  os << "attn_dropout = " << fmt_g(attn_dropout) << "\n";
  os << "optimizer = " << optimizer << "\n";
  os << "lr_f = " << fmt_g(lr_f) << "\n";
  os << "lr_g = " << fmt_g(lr_g) << "\n";
  os << "epochs = " << epochs << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "g_update_every = " << g_update_every << "\n";
  os << "early_stop_patience = " << early_stop_patience << "\n";
  os << "mixup_alpha = " << fmt_g(mixup_alpha) << "\n";
  os << "mixgen_lambda = " << fmt_g(mixgen_lambda) << "\n";
  os << "augment_modalities = " << augment_modalities << "\n";
  os << "seeds = " << join_u64(seeds) << "\n";
  os << "output_dir = " << output_dir << "\n";
  os << "verbose_steps = " << (verbose_steps ? "true" : "false") << "\n";
  return os.str();
}

void ExperimentConfig::validate() const {
  if (dataset != "complementary" && dataset != "perfect_correlation" && dataset != "ingest") {
    throw ConfigError("dataset must be complementary, perfect_correlation, or ingest; got '" + dataset + "'");
  }
  if (dataset == "ingest" && ingest_path.empty()) throw ConfigError("ingest dataset needs ingest_path");
  if (dataset != "ingest" && (n_train < 1 || n_val < 0 || n_test < 0)) {
    throw ConfigError("synthetic datasets need n_train >= 1 and non-negative n_val/n_test");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (noise < 0.0) throw ConfigError("noise must be >= 0");
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  if (hidden < 1 || emb_dim < 1 || feature_dim < 1) throw ConfigError("network widths must be >= 1");

  static const char* kAug[] = {"none",      "lemda_mlp_vae",  "lemda_attention_vae",
                               "input_aug", "mixup",          "manifold_mixup",
                               "mixgen"};
  bool ok = false;
  for (const char* a : kAug) ok = ok || augmentation == a;
  if (!ok) throw ConfigError("unknown augmentation '" + augmentation + "'");

  LossWeights w{w1, w2, w3, alpha_conf};
  w.validate();
  regularizer_from_string(regularizer);  // throws on unknown
  optimizer_kind_from_string(optimizer);
  if (latent_dim < 1 || vae_hidden < 1) throw ConfigError("VAE dims must be >= 1");
  if (vae_dropout < 0.0 || vae_dropout >= 1.0) throw ConfigError("vae_dropout must lie in [0,1)");
  if (attn_layers < 1 || attn_heads < 1 || attn_d_model < 1 || attn_ff < 1) {
    throw ConfigError("attention dims must be >= 1");
  }
  if (attn_d_model % attn_heads != 0) throw ConfigError("attn_d_model must be divisible by attn_heads");
  if (attn_dropout < 0.0 || attn_dropout >= 1.0) throw ConfigError("attn_dropout must lie in [0,1)");
  if (lr_f <= 0.0 || lr_g <= 0.0) throw ConfigError("learning rates must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (g_update_every < 1) throw ConfigError("g_update_every must be >= 1");
  if (early_stop_patience < 0) throw ConfigError("early_stop_patience must be >= 0");
  if (!(mixup_alpha > 0.0 && mixup_alpha <= 1.0)) throw ConfigError("mixup_alpha must lie in (0,1]");
  if (mixgen_lambda < 0.0 || mixgen_lambda > 1.0) throw ConfigError("mixgen_lambda must lie in [0,1]");
  if (seeds.empty()) throw ConfigError("seeds must name at least one seed");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

bool ExperimentConfig::is_lemda() const {
  return augmentation == "lemda_mlp_vae" || augmentation == "lemda_attention_vae";
}

bool ExperimentConfig::is_baseline() const {
  return augmentation == "input_aug" || augmentation == "mixup" ||
         augmentation == "manifold_mixup" || augmentation == "mixgen";
}

AugmentChoice ExperimentConfig::augment_choice() const {
  if (augmentation == "none") return AugmentChoice::none;
  if (augmentation == "lemda_mlp_vae") return AugmentChoice::lemda_mlp_vae;
  if (augmentation == "lemda_attention_vae") return AugmentChoice::lemda_attention_vae;
  return AugmentChoice::baseline;
}

BaselineKind ExperimentConfig::baseline_kind() const {
  return baseline_kind_from_string(augmentation);
}

}  // namespace lemda
