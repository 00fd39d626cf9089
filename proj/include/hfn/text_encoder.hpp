/// Pluggable global text encoding. The default encoder is a hashed
/// word 1/2-gram bag followed by a fixed-seed linear projection, so the
/// whole suite runs without pretrained language-model weights. Frozen.
#pragma once

#include <cctype>
#include <memory>
#include <string>
#include <vector>

#include "hfn/core.hpp"
#include "hfn/extractors.hpp"

namespace hfn {

struct TextFeature {
  Mat values;  // 1 × d_text
  bool present = false;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual Mat encode(const std::string& sentence) const = 0;  // 1 × dim
  virtual void collect_params(FrozenParamList& out) const = 0;
};

inline std::vector<std::string> tokenize_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class HashedNgramEncoder : public TextEncoder {
 public:
  HashedNgramEncoder(int dim, uint64_t seed, int buckets = 512) : dim_(dim), buckets_(buckets) {
    Rng rng = Rng::derive(seed, "text_encoder");
    proj_ = glorot_mat(buckets, dim, rng);
  }

  std::string name() const override { return "hashed_ngram"; }
  int dim() const override { return dim_; }

  // Unigram and bigram counts hashed into buckets, L2-normalized, then
  // projected. Tokenless input maps to the zero vector.
  Mat encode(const std::string& sentence) const override {
    std::vector<std::string> words = tokenize_words(sentence);
    Mat counts(1, buckets_);
    for (size_t i = 0; i < words.size(); ++i) {
      counts(0, static_cast<int>(fnv1a64(words[i]) % static_cast<uint64_t>(buckets_))) += 1.0;
      if (i + 1 < words.size()) {
        std::string bigram = words[i] + " " + words[i + 1];
        counts(0, static_cast<int>(fnv1a64(bigram) % static_cast<uint64_t>(buckets_))) += 1.0;
      }
    }
    double norm = 0.0;
    for (double v : counts.a) norm += v * v;
    if (norm == 0.0) return Mat(1, dim_);
    norm = std::sqrt(norm);
    for (double& v : counts.a) v /= norm;
    return matmul(counts, proj_);
  }

  void collect_params(FrozenParamList& out) const override {
    out.emplace_back("text_encoder.proj", &proj_);
  }

 private:
  int dim_;
  int buckets_;
  Mat proj_;
};

inline TextFeature encode_text(const std::string& sentence, const TextEncoder& encoder) {
  TextFeature f;
  f.present = !tokenize_words(sentence).empty();
  f.values = f.present ? encoder.encode(sentence) : Mat(1, encoder.dim());
  return f;
}

inline std::unique_ptr<TextEncoder> make_text_encoder(const std::string& name, int dim,
                                                      uint64_t seed) {
  if (name == "hashed_ngram") return std::make_unique<HashedNgramEncoder>(dim, seed);
  fail_validation("unknown text encoder \"" + name + "\" (available: hashed_ngram)");
}

}  // namespace hfn
