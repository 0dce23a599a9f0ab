#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lemda/data.hpp"

namespace lemda {

// Two modalities where either one alone determines the label: Gaussian class
// clusters on the continuous side, class-conditional unigram token sequences
// on the other. `noise` in [0,1] controls class overlap on both sides.
// Labels are stratified (uniform within +-1 across classes).
Dataset gen_perfect_correlation(SplitSizes n, int num_classes, double noise, std::uint64_t seed);

// Binary task with label = XOR(b1, b2) of two latent bits; modality 1 encodes
// only b1 (two continuous clusters), modality 2 only b2 (two token unigram
// distributions). Marginally each modality is independent of the label.
Dataset gen_complementary(SplitSizes n, double noise, std::uint64_t seed);

// Schema for ingesting a CSV or JSON-lines file of mixed tabular/text rows.
struct IngestSchema {
  std::string label_column;
  std::vector<std::string> numeric_columns;
  std::vector<std::string> text_columns;
  std::vector<std::string> categorical_columns;
  int max_len = 8;        // token sequences truncated to this length
  int feature_dim = 16;   // encoder output width per modality
  double train_frac = 0.8;
  double val_frac = 0.1;
  std::uint64_t seed = 0;
};

// Builds a Dataset from a file. Numeric columns are z-scored with train-split
// statistics; categoricals are integer-coded with code 0 as the unknown
// bucket; text is whitespace-tokenized against a train-split vocabulary with
// OOV id 0. Rows are ranked by hash(row index, seed) and split by count.
Dataset ingest_tabular_text(const std::string& path, const IngestSchema& schema);

// Writes a dataset to the documented CSV schema (see README): label column,
// numeric columns per continuous dim, one space-joined token column per token
// modality, one column per categorical field.
void export_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace lemda
