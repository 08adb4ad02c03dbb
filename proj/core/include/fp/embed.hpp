#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fp/codebook.hpp"

namespace fp {

// Samples placed in diffusion space as convex combinations of the K code
// words, restricted to two plotted coordinates. Each sample row lies inside
// the convex hull of the word rows; its barycentric weights are its histogram.
struct SampleEmbedding {
  Eigen::MatrixXd coords;       // n x 2
  Eigen::MatrixXd word_coords;  // K x 2
  std::vector<std::string> sample_ids;
  std::vector<std::string> labels;
  std::array<Eigen::Index, 2> dims = {0, 1};
};

SampleEmbedding embed_samples(const std::vector<Histogram>& hists,
                              const std::vector<std::string>& sample_ids,
                              const std::vector<std::string>& labels, const Codebook& cb,
                              std::array<Eigen::Index, 2> dims = {0, 1});

// kind(word|sample),id,label,x,y rows; coordinates at 12 significant digits.
std::string export_embedding_csv(const SampleEmbedding& emb);

// Static scatter with one marker element per word and per sample and a legend
// keyed by label. Byte-deterministic for identical inputs.
std::string export_embedding_svg(const SampleEmbedding& emb);

}  // namespace fp
