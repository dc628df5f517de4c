#include "cdl/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>

#include <spdlog/spdlog.h>

#include "cdl/error.hpp"
#include "text_util.hpp"

namespace cdl {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

// Handles "# dims A B" headers; returns true when the line was a comment.
bool parse_comment(std::string_view line, std::size_t* dim_a,
                   std::size_t* dim_b, bool* has_dims) {
  if (line.empty() || line.front() != '#') return false;
  auto fields = detail::split_fields(line.substr(1));
  if (fields.size() == 3 && fields[0] == "dims") {
    std::uint64_t a = 0, b = 0;
    if (detail::parse_uint(fields[1], a) && detail::parse_uint(fields[2], b)) {
      *dim_a = a;
      *dim_b = b;
      *has_dims = true;
    }
  }
  return true;
}

}  // namespace

RatingsMatrix::RatingsMatrix(std::size_t num_users, std::size_t num_items,
                             std::vector<Rating> entries)
    : num_users_(num_users), num_items_(num_items) {
  for (const auto& r : entries) {
    if (r.user >= num_users || r.item >= num_items) {
      fail(ErrorKind::kValidation,
           "rating (" + std::to_string(r.user) + ", " + std::to_string(r.item) +
               ") outside " + std::to_string(num_users) + "x" +
               std::to_string(num_items));
    }
  }
  std::sort(entries.begin(), entries.end());
  auto dup = std::adjacent_find(entries.begin(), entries.end());
  if (dup != entries.end()) {
    fail(ErrorKind::kValidation, "duplicate rating (" +
                                     std::to_string(dup->user) + ", " +
                                     std::to_string(dup->item) + ")");
  }

  user_ptr_.assign(num_users + 1, 0);
  item_ptr_.assign(num_items + 1, 0);
  for (const auto& r : entries) {
    ++user_ptr_[r.user + 1];
    ++item_ptr_[r.item + 1];
  }
  std::partial_sum(user_ptr_.begin(), user_ptr_.end(), user_ptr_.begin());
  std::partial_sum(item_ptr_.begin(), item_ptr_.end(), item_ptr_.begin());

  user_items_.resize(entries.size());
  item_users_.resize(entries.size());
  std::vector<std::size_t> fill(item_ptr_.begin(), item_ptr_.end() - 1);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    user_items_[k] = entries[k].item;
    item_users_[fill[entries[k].item]++] = entries[k].user;
  }
}

std::span<const Index> RatingsMatrix::items_of(Index user) const {
  if (user >= num_users_) return {};
  return std::span<const Index>(user_items_)
      .subspan(user_ptr_[user], user_ptr_[user + 1] - user_ptr_[user]);
}

std::span<const Index> RatingsMatrix::users_of(Index item) const {
  if (item >= num_items_) return {};
  return std::span<const Index>(item_users_)
      .subspan(item_ptr_[item], item_ptr_[item + 1] - item_ptr_[item]);
}

bool RatingsMatrix::contains(Index user, Index item) const {
  auto items = items_of(user);
  return std::binary_search(items.begin(), items.end(), item);
}

std::vector<Rating> RatingsMatrix::entries() const {
  std::vector<Rating> out;
  out.reserve(nnz());
  for (Index u = 0; u < num_users_; ++u) {
    for (Index i : items_of(u)) out.push_back({u, i});
  }
  return out;
}

RatingsMatrix RatingsMatrix::resized(std::size_t num_users,
                                     std::size_t num_items) const {
  if (num_users < num_users_ || num_items < num_items_) {
    fail(ErrorKind::kArgument, "cannot shrink a ratings matrix");
  }
  return RatingsMatrix(num_users, num_items, entries());
}

RatingsMatrix load_ratings(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Rating> entries;
  std::size_t users = 0, items = 0;
  std::size_t header_users = 0, header_items = 0;
  bool has_dims = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (parse_comment(view, &header_users, &header_items, &has_dims)) continue;
    auto fields = detail::split_fields(view);
    std::uint64_t u = 0, i = 0;
    if (fields.size() != 2 || !detail::parse_uint(fields[0], u) ||
        !detail::parse_uint(fields[1], i) || u > UINT32_MAX - 1 ||
        i > UINT32_MAX - 1) {
      fail(ErrorKind::kParse,
           where(path, lineno) + "expected \"user<TAB>item\", got \"" +
               std::string(view) + "\"");
    }
    entries.push_back({static_cast<Index>(u), static_cast<Index>(i)});
    users = std::max<std::size_t>(users, u + 1);
    items = std::max<std::size_t>(items, i + 1);
  }
  if (has_dims) {
    if (header_users < users || header_items < items) {
      fail(ErrorKind::kValidation,
           path.string() + ": ids exceed the dims header");
    }
    users = header_users;
    items = header_items;
  }
  try {
    return RatingsMatrix(users, items, std::move(entries));
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void save_ratings(const RatingsMatrix& ratings,
                  const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "# dims " << ratings.num_users() << ' ' << ratings.num_items() << '\n';
  for (const auto& r : ratings.entries()) out << r.user << '\t' << r.item << '\n';
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

Normalization parse_normalization(const std::string& name) {
  if (name == "binary" || name == "binary-presence") {
    return Normalization::kBinaryPresence;
  }
  if (name == "maxnorm" || name == "count-maxnorm") {
    return Normalization::kCountMaxNorm;
  }
  fail(ErrorKind::kArgument, "unknown content normalization \"" + name +
                                 "\" (expected binary or maxnorm)");
}

const char* to_string(Normalization mode) noexcept {
  switch (mode) {
    case Normalization::kBinaryPresence: return "binary";
    case Normalization::kCountMaxNorm: return "maxnorm";
  }
  return "?";
}

ContentMatrix::ContentMatrix(SparseRows values, Normalization mode)
    : values_(std::move(values)), mode_(mode) {
  values_.makeCompressed();
  const double* v = values_.valuePtr();
  for (Eigen::Index k = 0; k < values_.nonZeros(); ++k) {
    if (!(v[k] >= 0.0 && v[k] <= 1.0)) {
      fail(ErrorKind::kValidation, "content value " + std::to_string(v[k]) +
                                       " outside [0, 1]");
    }
  }
}

std::size_t ContentMatrix::empty_rows() const {
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < values_.rows(); ++j) {
    bool empty = true;
    for (SparseRows::InnerIterator it(values_, j); it; ++it) {
      if (it.value() != 0.0) {
        empty = false;
        break;
      }
    }
    count += empty ? 1 : 0;
  }
  return count;
}

ContentMatrix normalize_content(std::size_t num_items, std::size_t vocab_size,
                                std::span<const ContentTriple> triples,
                                Normalization mode) {
  std::vector<double> row_max(num_items, 0.0);
  for (const auto& t : triples) {
    if (t.item >= num_items) {
      fail(ErrorKind::kValidation, "item id " + std::to_string(t.item) +
                                       " >= " + std::to_string(num_items));
    }
    if (t.word >= vocab_size) {
      fail(ErrorKind::kValidation, "word id " + std::to_string(t.word) +
                                       " >= vocabulary size " +
                                       std::to_string(vocab_size));
    }
    if (!(t.count >= 0.0) || !std::isfinite(t.count)) {
      fail(ErrorKind::kValidation,
           "invalid count " + std::to_string(t.count) + " for item " +
               std::to_string(t.item) + ", word " + std::to_string(t.word));
    }
    row_max[t.item] = std::max(row_max[t.item], t.count);
  }

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(triples.size());
  for (const auto& t : triples) {
    if (t.count == 0.0) continue;
    double value = mode == Normalization::kBinaryPresence
                       ? 1.0
                       : t.count / row_max[t.item];
    entries.emplace_back(static_cast<int>(t.item), static_cast<int>(t.word),
                         value);
  }
  SparseRows values(static_cast<Eigen::Index>(num_items),
                    static_cast<Eigen::Index>(vocab_size));
  values.setFromTriplets(entries.begin(), entries.end(), [](double, double) {
    fail(ErrorKind::kValidation, "duplicate (item, word) content entry");
    return 0.0;
  });
  ContentMatrix content(std::move(values), mode);
  if (std::size_t empty = content.empty_rows(); empty > 0) {
    spdlog::warn("{} of {} items have an all-zero content row", empty,
                 num_items);
  }
  return content;
}

ContentFile read_content_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  ContentFile file;
  std::size_t header_items = 0, header_words = 0;
  bool has_dims = false;
  std::size_t items = 0, words = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (parse_comment(view, &header_items, &header_words, &has_dims)) continue;
    auto fields = detail::split_fields(view);
    std::uint64_t item = 0, word = 0;
    double count = 0.0;
    if (fields.size() != 3 || !detail::parse_uint(fields[0], item) ||
        !detail::parse_uint(fields[1], word) ||
        !detail::parse_double(fields[2], count) || item > UINT32_MAX - 1 ||
        word > UINT32_MAX - 1) {
      fail(ErrorKind::kParse, where(path, lineno) +
                                  "expected \"item<TAB>word<TAB>count\", got \"" +
                                  std::string(view) + "\"");
    }
    if (count < 0.0) {
      fail(ErrorKind::kValidation,
           where(path, lineno) + "negative count " + std::string(fields[2]));
    }
    file.triples.push_back(
        {static_cast<Index>(item), static_cast<Index>(word), count});
    items = std::max<std::size_t>(items, item + 1);
    words = std::max<std::size_t>(words, word + 1);
  }
  file.num_items = has_dims ? header_items : items;
  file.vocab_size = has_dims ? header_words : words;
  return file;
}

ContentMatrix load_content(const std::filesystem::path& path,
                           Normalization mode) {
  ContentFile file = read_content_file(path);
  try {
    return normalize_content(file.num_items, file.vocab_size, file.triples,
                             mode);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void save_content(const ContentMatrix& content,
                  const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "# dims " << content.num_items() << ' ' << content.vocab_size()
      << '\n';
  out.precision(17);
  const auto& values = content.values();
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    for (SparseRows::InnerIterator it(values, j); it; ++it) {
      out << j << '\t' << it.col() << '\t' << it.value() << '\n';
    }
  }
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

ContentMatrix corrupt(const ContentMatrix& content, double noise_level,
                      std::mt19937_64& rng) {
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) {
    fail(ErrorKind::kArgument, "noise level " + std::to_string(noise_level) +
                                   " outside [0, 1]");
  }
  SparseRows values = content.values();
  if (noise_level > 0.0) {
    std::bernoulli_distribution masked(noise_level);
    double* v = values.valuePtr();
    for (Eigen::Index k = 0; k < values.nonZeros(); ++k) {
      if (masked(rng)) v[k] = 0.0;
    }
    values.prune(0.0, 0.0);
  }
  return ContentMatrix(std::move(values), content.normalization());
}

ContentMatrix corrupt(const ContentMatrix& content, double noise_level,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return corrupt(content, noise_level, rng);
}

Split split_ratings(const RatingsMatrix& ratings, std::size_t train_per_user,
                    std::uint64_t seed) {
  if (train_per_user == 0) fail(ErrorKind::kArgument, "P must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<Rating> train, test;
  Split split;
  split.train_per_user = train_per_user;
  split.seed = seed;
  std::vector<Index> items;
  for (Index u = 0; u < ratings.num_users(); ++u) {
    auto rated = ratings.items_of(u);
    if (rated.size() <= train_per_user) {
      for (Index i : rated) train.push_back({u, i});
      continue;
    }
    items.assign(rated.begin(), rated.end());
    // partial Fisher-Yates: the first P positions become a uniform sample
    for (std::size_t k = 0; k < train_per_user; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, items.size() - 1);
      std::swap(items[k], items[pick(rng)]);
    }
    for (std::size_t k = 0; k < items.size(); ++k) {
      (k < train_per_user ? train : test).push_back({u, items[k]});
    }
    split.eval_users.push_back(u);
  }
  split.train =
      RatingsMatrix(ratings.num_users(), ratings.num_items(), std::move(train));
  split.test =
      RatingsMatrix(ratings.num_users(), ratings.num_items(), std::move(test));
  return split;
}

std::vector<Split> split_repetitions(const RatingsMatrix& ratings,
                                     const SplitSpec& spec) {
  std::vector<Split> out;
  out.reserve(spec.repetitions);
  for (std::size_t r = 0; r < spec.repetitions; ++r) {
    out.push_back(split_ratings(ratings, spec.train_per_user, spec.seed + r));
  }
  return out;
}

void write_split_manifest(const Split& split,
                          const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "# cdl split manifest\n";
  out << "seed\t" << split.seed << '\n';
  out << "P\t" << split.train_per_user << '\n';
  out << "users\t" << split.train.num_users() << '\n';
  out << "items\t" << split.train.num_items() << '\n';
  out << "train\t" << split.train.nnz() << '\n';
  for (const auto& r : split.train.entries()) {
    out << r.user << '\t' << r.item << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

Split read_split_manifest(const std::filesystem::path& path,
                          const RatingsMatrix& ratings) {
  auto in = open_input(path);
  std::map<std::string, std::uint64_t> header;
  std::vector<Rating> train;
  std::string line;
  std::size_t lineno = 0;
  std::size_t expected = 0;
  bool in_entries = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_fields(view);
    std::uint64_t a = 0, b = 0;
    if (fields.size() != 2 || !detail::parse_uint(fields[1], b)) {
      fail(ErrorKind::kParse, where(path, lineno) + "malformed manifest line");
    }
    if (!in_entries) {
      header[std::string(fields[0])] = b;
      if (fields[0] == "train") {
        in_entries = true;
        expected = b;
      }
      continue;
    }
    if (!detail::parse_uint(fields[0], a)) {
      fail(ErrorKind::kParse, where(path, lineno) + "malformed train entry");
    }
    train.push_back({static_cast<Index>(a), static_cast<Index>(b)});
  }
  for (const char* key : {"seed", "P", "users", "items", "train"}) {
    if (!header.contains(key)) {
      fail(ErrorKind::kParse, path.string() + ": missing \"" + key + "\"");
    }
  }
  if (train.size() != expected) {
    fail(ErrorKind::kParse, path.string() + ": expected " +
                                std::to_string(expected) + " train entries");
  }
  if (header["users"] != ratings.num_users() ||
      header["items"] != ratings.num_items()) {
    fail(ErrorKind::kValidation,
         path.string() + ": manifest dimensions do not match the ratings");
  }

  Split split;
  split.seed = header["seed"];
  split.train_per_user = header["P"];
  for (const auto& r : train) {
    if (!ratings.contains(r.user, r.item)) {
      fail(ErrorKind::kValidation, path.string() +
                                       ": train entry not in the ratings (" +
                                       std::to_string(r.user) + ", " +
                                       std::to_string(r.item) + ")");
    }
  }
  split.train =
      RatingsMatrix(ratings.num_users(), ratings.num_items(), std::move(train));
  std::vector<Rating> test;
  for (const auto& r : ratings.entries()) {
    if (!split.train.contains(r.user, r.item)) test.push_back(r);
  }
  split.test =
      RatingsMatrix(ratings.num_users(), ratings.num_items(), std::move(test));
  for (Index u = 0; u < ratings.num_users(); ++u) {
    if (!split.test.items_of(u).empty()) split.eval_users.push_back(u);
  }
  return split;
}

std::vector<std::string> load_vocabulary(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> tokens;
  std::vector<bool> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_fields(view);
    std::uint64_t id = 0;
    if (fields.size() != 2 || !detail::parse_uint(fields[1], id) ||
        id > UINT32_MAX - 1) {
      fail(ErrorKind::kParse,
           where(path, lineno) + "expected \"token<TAB>word_id\"");
    }
    if (id >= tokens.size()) {
      tokens.resize(id + 1);
      seen.resize(id + 1, false);
    }
    if (seen[id]) {
      fail(ErrorKind::kValidation,
           where(path, lineno) + "word id " + std::to_string(id) + " repeated");
    }
    seen[id] = true;
    tokens[id] = std::string(fields[0]);
  }
  return tokens;
}

Vocabulary select_vocabulary(std::span<const ContentTriple> triples,
                             std::span<const std::string> tokens,
                             std::size_t num_items,
                             std::size_t selected_size) {
  std::vector<std::size_t> doc_freq(tokens.size(), 0);
  std::vector<double> term_count(tokens.size(), 0.0);
  for (const auto& t : triples) {
    if (t.word >= tokens.size()) {
      fail(ErrorKind::kValidation,
           "word id " + std::to_string(t.word) + " has no vocabulary token");
    }
    if (t.count > 0.0) {
      ++doc_freq[t.word];
      term_count[t.word] += t.count;
    }
  }
  Vocabulary vocab;
  for (std::size_t w = 0; w < tokens.size(); ++w) {
    if (doc_freq[w] == 0) continue;
    double idf = std::log(static_cast<double>(num_items) /
                          static_cast<double>(doc_freq[w]));
    vocab.terms.push_back({tokens[w], static_cast<Index>(w), doc_freq[w],
                           term_count[w] * idf});
  }
  std::sort(vocab.terms.begin(), vocab.terms.end(),
            [](const VocabTerm& x, const VocabTerm& y) {
              if (x.score != y.score) return x.score > y.score;
              return x.token < y.token;
            });
  vocab.selected_size = std::min(selected_size, vocab.terms.size());
  return vocab;
}

std::vector<ContentTriple> restrict_to_vocabulary(
    std::span<const ContentTriple> triples, const Vocabulary& vocab) {
  std::map<Index, Index> remap;
  auto selected = vocab.selected();
  for (std::size_t k = 0; k < selected.size(); ++k) {
    remap[selected[k].word_id] = static_cast<Index>(k);
  }
  std::vector<ContentTriple> out;
  for (const auto& t : triples) {
    auto it = remap.find(t.word);
    if (it != remap.end()) out.push_back({t.item, it->second, t.count});
  }
  return out;
}

void save_vocabulary(const Vocabulary& vocab,
                     const std::filesystem::path& path) {
  auto out = open_output(path);
  auto selected = vocab.selected();
  for (std::size_t k = 0; k < selected.size(); ++k) {
    out << selected[k].token << '\t' << k << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace cdl
