#pragma once

// Ratings and content loading, normalization, masking corruption, per-user
// train/test splitting, and tf-idf vocabulary selection.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace cdl {

using Index = std::uint32_t;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Rating {
  Index user;
  Index item;

  friend bool operator==(const Rating&, const Rating&) = default;
  friend auto operator<=>(const Rating&, const Rating&) = default;
};

/// Binary implicit-feedback matrix. Stored entries are the observed 1s; both
/// the per-user and the per-item index are kept so that user and item sweeps
/// can walk their neighbours without a transpose.
class RatingsMatrix {
 public:
  RatingsMatrix() = default;

  /// Throws a validation error on out-of-range ids or duplicate pairs.
  RatingsMatrix(std::size_t num_users, std::size_t num_items,
                std::vector<Rating> entries);

  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_items() const noexcept { return num_items_; }
  std::size_t nnz() const noexcept { return user_items_.size(); }

  /// Sorted item ids rated by `user`.
  std::span<const Index> items_of(Index user) const;
  /// Sorted user ids that rated `item`.
  std::span<const Index> users_of(Index item) const;
  bool contains(Index user, Index item) const;

  /// All entries in (user, item) order.
  std::vector<Rating> entries() const;

  /// Same entries in a matrix with at least as many users/items.
  RatingsMatrix resized(std::size_t num_users, std::size_t num_items) const;

  friend bool operator==(const RatingsMatrix& lhs, const RatingsMatrix& rhs) {
    return lhs.num_users_ == rhs.num_users_ &&
           lhs.num_items_ == rhs.num_items_ &&
           lhs.user_ptr_ == rhs.user_ptr_ && lhs.user_items_ == rhs.user_items_;
  }

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<std::size_t> user_ptr_{0};
  std::vector<Index> user_items_;
  std::vector<std::size_t> item_ptr_{0};
  std::vector<Index> item_users_;
};

/// Reads "user<TAB>item" lines. Blank lines and '#' comments are skipped; a
/// "# dims <users> <items>" comment overrides the inferred dimensions.
RatingsMatrix load_ratings(const std::filesystem::path& path);
void save_ratings(const RatingsMatrix& ratings,
                  const std::filesystem::path& path);

enum class Normalization {
  kBinaryPresence,  // count > 0 -> 1
  kCountMaxNorm,    // divide each row by its max count
};

Normalization parse_normalization(const std::string& name);
const char* to_string(Normalization mode) noexcept;

struct ContentTriple {
  Index item;
  Index word;
  double count;
};

/// Item-by-word content rows with every stored value in [0, 1].
class ContentMatrix {
 public:
  ContentMatrix() = default;
  ContentMatrix(SparseRows values, Normalization mode);

  std::size_t num_items() const noexcept {
    return static_cast<std::size_t>(values_.rows());
  }
  std::size_t vocab_size() const noexcept {
    return static_cast<std::size_t>(values_.cols());
  }
  std::size_t nnz() const noexcept {
    return static_cast<std::size_t>(values_.nonZeros());
  }
  const SparseRows& values() const noexcept { return values_; }
  Normalization normalization() const noexcept { return mode_; }
  /// Number of items whose row has no nonzero entry.
  std::size_t empty_rows() const;

 private:
  SparseRows values_;
  Normalization mode_ = Normalization::kBinaryPresence;
};

/// Builds a normalized content matrix from raw (item, word, count) triples.
/// Zero counts are dropped; negative counts and out-of-range ids are
/// validation errors.
ContentMatrix normalize_content(std::size_t num_items, std::size_t vocab_size,
                                std::span<const ContentTriple> triples,
                                Normalization mode);

struct ContentFile {
  std::size_t num_items = 0;
  std::size_t vocab_size = 0;
  std::vector<ContentTriple> triples;
};

/// Parses "item<TAB>word<TAB>count" lines; "# dims <items> <words>" fixes
/// the shape, otherwise it is inferred as max-id + 1.
ContentFile read_content_file(const std::filesystem::path& path);

ContentMatrix load_content(const std::filesystem::path& path,
                           Normalization mode);

/// Writes the stored values as triples (with a dims header).
void save_content(const ContentMatrix& content,
                  const std::filesystem::path& path);

/// Masking noise: every stored entry is independently zeroed with
/// probability `noise_level`.
ContentMatrix corrupt(const ContentMatrix& content, double noise_level,
                      std::mt19937_64& rng);
ContentMatrix corrupt(const ContentMatrix& content, double noise_level,
                      std::uint64_t seed);

struct SplitSpec {
  std::size_t train_per_user = 1;  // P
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
};

struct Split {
  RatingsMatrix train;
  RatingsMatrix test;
  std::vector<Index> eval_users;
  std::size_t train_per_user = 0;
  std::uint64_t seed = 0;
};

/// Keeps P uniformly chosen items of every user in training and moves the
/// rest to test. Users with at most P items stay entirely in training and are
/// not evaluated.
Split split_ratings(const RatingsMatrix& ratings, std::size_t train_per_user,
                    std::uint64_t seed);

/// One split per repetition, repetition r seeded with spec.seed + r.
std::vector<Split> split_repetitions(const RatingsMatrix& ratings,
                                     const SplitSpec& spec);

void write_split_manifest(const Split& split,
                          const std::filesystem::path& path);
/// Rebuilds a split from its manifest and the full ratings it came from.
Split read_split_manifest(const std::filesystem::path& path,
                          const RatingsMatrix& ratings);

struct VocabTerm {
  std::string token;
  Index word_id = 0;
  std::size_t doc_freq = 0;
  double score = 0.0;
};

struct Vocabulary {
  std::vector<VocabTerm> terms;  // ordered by score desc, then token
  std::size_t selected_size = 0;

  std::span<const VocabTerm> selected() const {
    return std::span<const VocabTerm>(terms).first(selected_size);
  }
};

/// Reads "token<TAB>word_id" lines into a word_id -> token table.
std::vector<std::string> load_vocabulary(const std::filesystem::path& path);

/// Scores every word by sum_j count_ij * ln(J / df_i) and keeps the top
/// `selected_size`.
Vocabulary select_vocabulary(std::span<const ContentTriple> triples,
                             std::span<const std::string> tokens,
                             std::size_t num_items, std::size_t selected_size);

/// Drops unselected words and renumbers the rest by selection rank.
std::vector<ContentTriple> restrict_to_vocabulary(
    std::span<const ContentTriple> triples, const Vocabulary& vocab);

/// Writes the selected terms with their new ids.
void save_vocabulary(const Vocabulary& vocab,
                     const std::filesystem::path& path);

}  // namespace cdl
