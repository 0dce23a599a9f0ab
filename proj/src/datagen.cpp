#include "lemda/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lemda/rng.hpp"
#include "json.hpp"

namespace lemda {

namespace {

constexpr int kContinuousDim = 8;
constexpr int kVocabSize = 50;
constexpr int kSeqLen = 8;
constexpr int kFeatureDim = 16;

std::vector<int> contiguous_range(int start, int count) {
  std::vector<int> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = start + i;
  return out;
}

void assign_splits(Dataset& ds, const SplitSizes& n) {
  ds.train_idx = contiguous_range(0, n.train);
  ds.val_idx = contiguous_range(n.train, n.val);
  ds.test_idx = contiguous_range(n.train + n.val, n.test);
  ds.validate_splits();
}

// Draws a token from [lo, hi).
int draw_token(Rng& rng, int lo, int hi) { return lo + rng.uniform_int(hi - lo); }

}  // namespace

Dataset gen_perfect_correlation(SplitSizes n, int num_classes, double noise, std::uint64_t seed) {
  const int total = n.total();
  if (num_classes < 2) throw std::invalid_argument("gen_perfect_correlation: need >= 2 classes");
  if (total < num_classes) throw std::invalid_argument("gen_perfect_correlation: n must be >= num_classes");
  if (noise < 0.0) throw std::invalid_argument("gen_perfect_correlation: noise must be >= 0");
  Rng rng(seed_stream(seed, 0x9E4Fu));
  Dataset ds;
  ds.num_classes = num_classes;
  ds.specs = {ModalitySpec::continuous("signal", kContinuousDim, kFeatureDim),
              ModalitySpec::tokens("text", kVocabSize, kSeqLen, kFeatureDim)};

  // Random class centroids, pairwise distinct with probability one.
  std::vector<std::vector<double>> centroids(static_cast<std::size_t>(num_classes));
  for (auto& c : centroids) {
    c.resize(kContinuousDim);
    for (auto& v : c) v = 3.0 * rng.normal();
  }
  // Token blocks: tokens [1, kVocabSize) divided evenly among classes.
  const int block = (kVocabSize - 1) / num_classes;
  if (block < 1) throw std::invalid_argument("gen_perfect_correlation: too many classes for vocab");
  const double own_block_prob = 1.0 / (1.0 + noise);

  // Stratified labels: uniform within +-1 count, order shuffled.
  std::vector<int> labels(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) labels[static_cast<std::size_t>(i)] = i % num_classes;
  rng.shuffle(labels);

  for (int i = 0; i < total; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    MultimodalExample ex;
    ex.label = y;
    ex.values.resize(2);
    auto& cont = ex.values[0].numeric;
    cont.resize(kContinuousDim);
    for (int j = 0; j < kContinuousDim; ++j) {
      cont[static_cast<std::size_t>(j)] = centroids[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)] +
                                          noise * rng.normal();
    }
    auto& toks = ex.values[1].tokens;
    toks.resize(kSeqLen);
    const int lo = 1 + y * block;
    for (int t = 0; t < kSeqLen; ++t) {
      toks[static_cast<std::size_t>(t)] = rng.bernoulli(own_block_prob)
                                              ? draw_token(rng, lo, lo + block)
                                              : draw_token(rng, 1, kVocabSize);
    }
    ds.examples.push_back(std::move(ex));
  }
  assign_splits(ds, n);
  return ds;
}

Dataset gen_complementary(SplitSizes n, double noise, std::uint64_t seed) {
  const int total = n.total();
  if (total < 4) throw std::invalid_argument("gen_complementary: need n >= 4");
  if (noise < 0.0) throw std::invalid_argument("gen_complementary: noise must be >= 0");
  Rng rng(seed_stream(seed, 0xC0312u));
  Dataset ds;
  ds.num_classes = 2;
  ds.specs = {ModalitySpec::continuous("signal", kContinuousDim, kFeatureDim),
              ModalitySpec::tokens("text", kVocabSize, kSeqLen, kFeatureDim)};

  const int half_vocab = 1 + (kVocabSize - 1) / 2;  // bit 0: [1, half), bit 1: [half, V)
  const double own_block_prob = 1.0 / (1.0 + noise);

  for (int i = 0; i < total; ++i) {
    const int b1 = rng.bernoulli(0.5) ? 1 : 0;
    const int b2 = rng.bernoulli(0.5) ? 1 : 0;
    MultimodalExample ex;
    ex.label = b1 ^ b2;
    ex.values.resize(2);
    auto& cont = ex.values[0].numeric;
    cont.resize(kContinuousDim);
    const double center = b1 ? 1.0 : -1.0;
    for (int j = 0; j < kContinuousDim; ++j) cont[static_cast<std::size_t>(j)] = center + noise * rng.normal();
    auto& toks = ex.values[1].tokens;
    toks.resize(kSeqLen);
    const int lo = b2 ? half_vocab : 1;
    const int hi = b2 ? kVocabSize : half_vocab;
    for (int t = 0; t < kSeqLen; ++t) {
      toks[static_cast<std::size_t>(t)] = rng.bernoulli(own_block_prob) ? draw_token(rng, lo, hi)
                                                                        : draw_token(rng, 1, kVocabSize);
    }
    ds.examples.push_back(std::move(ex));
  }
  assign_splits(ds, n);
  return ds;
}

// ---------------------------------------------------------------------------
// Ingestion.

namespace {

struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// RFC-style CSV: comma separator, first-row header, double quotes with ""
// escapes, fields may contain commas and newlines inside quotes.
RawTable parse_csv(const std::string& text) {
  RawTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool record_started = false;
  auto push_field = [&]() {
    record.push_back(field);
    field.clear();
  };
  auto push_record = [&]() {
    push_field();
    if (table.columns.empty()) {
      table.columns = record;
    } else {
      table.rows.push_back(record);
    }
    record.clear();
    record_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
      record_started = true;
    } else if (ch == ',') {
      push_field();
      record_started = true;
    } else if (ch == '\n') {
      if (record_started || !field.empty() || !record.empty()) push_record();
    } else if (ch != '\r') {
      field.push_back(ch);
      record_started = true;
    }
  }
  if (record_started || !field.empty() || !record.empty()) push_record();
  return table;
}

RawTable parse_jsonl(const std::string& text, const std::vector<std::string>& wanted) {
  RawTable table;
  table.columns = wanted;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    std::vector<std::string> row;
    for (const auto& col : wanted) {
      if (!obj.contains(col)) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing column '" + col + "'");
      }
      const auto& v = obj.at(col);
      row.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double parse_numeric(const std::string& s, int row, const std::string& col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("row " + std::to_string(row) + ": unparsable numeric value '" + s +
                             "' in column '" + col + "'");
  }
}

std::vector<std::string> whitespace_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

Dataset ingest_tabular_text(const std::string& path, const IngestSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<std::string> wanted;
  wanted.push_back(schema.label_column);
  wanted.insert(wanted.end(), schema.numeric_columns.begin(), schema.numeric_columns.end());
  wanted.insert(wanted.end(), schema.text_columns.begin(), schema.text_columns.end());
  wanted.insert(wanted.end(), schema.categorical_columns.begin(), schema.categorical_columns.end());

  RawTable table;
  if (ends_with(path, ".jsonl") || ends_with(path, ".json")) {
    table = parse_jsonl(text, wanted);
  } else {
    table = parse_csv(text);
  }
  if (table.rows.empty()) throw std::runtime_error("dataset file has no data rows: " + path);

  std::map<std::string, int> col_index;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    col_index[table.columns[i]] = static_cast<int>(i);
  }
  for (const auto& col : wanted) {
    if (!col_index.count(col)) throw std::runtime_error("schema column '" + col + "' not found in " + path);
  }
  auto cell = [&](int row, const std::string& col) -> const std::string& {
    const auto& r = table.rows[static_cast<std::size_t>(row)];
    const int ci = col_index.at(col);
    if (ci >= static_cast<int>(r.size())) {
      throw std::runtime_error("row " + std::to_string(row + 1) + ": missing field '" + col + "'");
    }
    return r[static_cast<std::size_t>(ci)];
  };

  const int n = static_cast<int>(table.rows.size());

  // Deterministic split: rank rows by hash(row index, seed), then cut by count.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ha = Rng::mix(schema.seed ^ (0x51ED2701ULL + static_cast<std::uint64_t>(a) * 0x9e3779b97f4a7c15ULL));
    const auto hb = Rng::mix(schema.seed ^ (0x51ED2701ULL + static_cast<std::uint64_t>(b) * 0x9e3779b97f4a7c15ULL));
    return ha != hb ? ha < hb : a < b;
  });
  const int n_train = static_cast<int>(std::floor(schema.train_frac * n));
  const int n_val = static_cast<int>(std::floor(schema.val_frac * n));
  if (n_train < 1) throw std::runtime_error("ingest: train split is empty");
  std::set<int> train_rows(order.begin(), order.begin() + n_train);

  // Label mapping over the whole file, sorted for determinism.
  std::set<std::string> label_values;
  for (int i = 0; i < n; ++i) label_values.insert(cell(i, schema.label_column));
  if (label_values.size() < 2) throw std::runtime_error("ingest: need at least two label values");
  std::map<std::string, int> label_code;
  for (const auto& v : label_values) label_code[v] = static_cast<int>(label_code.size());

  // Train-split statistics for numeric columns (z-score), never from val/test.
  std::vector<double> col_mean(schema.numeric_columns.size(), 0.0);
  std::vector<double> col_std(schema.numeric_columns.size(), 1.0);
  for (std::size_t c = 0; c < schema.numeric_columns.size(); ++c) {
    double s = 0.0, s2 = 0.0;
    for (int i : train_rows) {
      const double v = parse_numeric(cell(i, schema.numeric_columns[c]), i + 1, schema.numeric_columns[c]);
      s += v;
      s2 += v * v;
    }
    const double m = s / n_train;
    const double var = std::max(0.0, s2 / n_train - m * m);
    col_mean[c] = m;
    col_std[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  // Train-split categorical codes; 0 is the unknown bucket.
  std::vector<std::map<std::string, int>> cat_codes(schema.categorical_columns.size());
  for (std::size_t c = 0; c < schema.categorical_columns.size(); ++c) {
    std::set<std::string> values;
    for (int i : train_rows) values.insert(cell(i, schema.categorical_columns[c]));
    for (const auto& v : values) cat_codes[c][v] = static_cast<int>(cat_codes[c].size()) + 1;
  }

  // Train-split vocabulary per text column; 0 is the OOV id.
  std::vector<std::map<std::string, int>> vocabs(schema.text_columns.size());
  for (std::size_t c = 0; c < schema.text_columns.size(); ++c) {
    std::set<std::string> words;
    for (int i : train_rows) {
      for (const auto& w : whitespace_tokens(cell(i, schema.text_columns[c]))) words.insert(w);
    }
    for (const auto& w : words) vocabs[c][w] = static_cast<int>(vocabs[c].size()) + 1;
  }

  Dataset ds;
  ds.num_classes = static_cast<int>(label_code.size());
  if (!schema.numeric_columns.empty()) {
    ds.specs.push_back(ModalitySpec::continuous("numeric", static_cast<int>(schema.numeric_columns.size()),
                                                schema.feature_dim));
  }
  for (std::size_t c = 0; c < schema.text_columns.size(); ++c) {
    ds.specs.push_back(ModalitySpec::tokens(schema.text_columns[c],
                                            static_cast<int>(vocabs[c].size()) + 1, schema.max_len,
                                            schema.feature_dim));
  }
  if (!schema.categorical_columns.empty()) {
    std::vector<int> cards;
    for (const auto& codes : cat_codes) cards.push_back(static_cast<int>(codes.size()) + 1);
    ds.specs.push_back(ModalitySpec::categorical("categorical", std::move(cards), schema.feature_dim));
  }
  if (ds.specs.empty()) throw std::runtime_error("ingest: schema names no data columns");

  for (int i = 0; i < n; ++i) {
    MultimodalExample ex;
    ex.label = label_code.at(cell(i, schema.label_column));
    if (!schema.numeric_columns.empty()) {
      ModalityValue mv;
      for (std::size_t c = 0; c < schema.numeric_columns.size(); ++c) {
        const double v = parse_numeric(cell(i, schema.numeric_columns[c]), i + 1, schema.numeric_columns[c]);
        mv.numeric.push_back((v - col_mean[c]) / col_std[c]);
      }
      ex.values.push_back(std::move(mv));
    }
    for (std::size_t c = 0; c < schema.text_columns.size(); ++c) {
      ModalityValue mv;
      for (const auto& w : whitespace_tokens(cell(i, schema.text_columns[c]))) {
        if (static_cast<int>(mv.tokens.size()) >= schema.max_len) break;
        auto it = vocabs[c].find(w);
        mv.tokens.push_back(it == vocabs[c].end() ? 0 : it->second);
      }
      if (mv.tokens.empty()) mv.tokens.push_back(0);  // empty text reads as one OOV token
      ex.values.push_back(std::move(mv));
    }
    if (!schema.categorical_columns.empty()) {
      ModalityValue mv;
      for (std::size_t c = 0; c < schema.categorical_columns.size(); ++c) {
        auto it = cat_codes[c].find(cell(i, schema.categorical_columns[c]));
        mv.categories.push_back(it == cat_codes[c].end() ? 0 : it->second);
      }
      ex.values.push_back(std::move(mv));
    }
    ds.examples.push_back(std::move(ex));
  }

  ds.train_idx.assign(order.begin(), order.begin() + n_train);
  ds.val_idx.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  ds.test_idx.assign(order.begin() + n_train + n_val, order.end());
  ds.validate_splits();
  return ds;
}

void export_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  out << "label,split";
  for (const auto& spec : ds.specs) {
    switch (spec.kind) {
      case ModalityKind::continuous_vector:
        for (int j = 0; j < spec.dim; ++j) out << "," << spec.name << "_" << j;
        break;
      case ModalityKind::token_sequence:
        out << "," << spec.name;
        break;
      case ModalityKind::categorical:
        for (std::size_t f = 0; f < spec.cardinalities.size(); ++f) out << "," << spec.name << "_f" << f;
        break;
    }
  }
  out << "\n";
  std::vector<std::string> split_of(ds.examples.size(), "train");
  for (int i : ds.val_idx) split_of[static_cast<std::size_t>(i)] = "val";
  for (int i : ds.test_idx) split_of[static_cast<std::size_t>(i)] = "test";
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const auto& ex = ds.examples[i];
    out << ex.label << "," << split_of[i];
    for (std::size_t m = 0; m < ds.specs.size(); ++m) {
      const auto& spec = ds.specs[m];
      const auto& v = ex.values[m];
      switch (spec.kind) {
        case ModalityKind::continuous_vector:
          for (double x : v.numeric) out << "," << fmt_g(x);
          break;
        case ModalityKind::token_sequence: {
          out << ",";
          for (std::size_t t = 0; t < v.tokens.size(); ++t) {
            if (t) out << " ";
            out << "t" << v.tokens[t];
          }
          break;
        }
        case ModalityKind::categorical:
          for (int c : v.categories) out << "," << c;
          break;
      }
    }
    out << "\n";
  }
}

}  // namespace lemda
