#include "cdl/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "cdl/error.hpp"
#include "text_util.hpp"

namespace cdl {

namespace {

constexpr const char* kNetworkMagic = "cdl-model";
constexpr const char* kFactorMagic = "cdl-factors";
constexpr int kFormatVersion = 1;

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) fail(ErrorKind::kIo, "cannot open " + path.string());
  }

  std::vector<std::string_view> fields() {
    while (std::getline(in_, line_)) {
      ++lineno_;
      auto view = detail::trim(line_);
      if (!view.empty()) return detail::split_fields(view);
    }
    error("unexpected end of file");
  }

  std::string_view raw_line() {
    if (!std::getline(in_, line_)) error("unexpected end of file");
    ++lineno_;
    return detail::trim(line_);
  }

  void expect(std::string_view word, const std::vector<std::string_view>& f) {
    if (f.empty() || f[0] != word) {
      error("expected \"" + std::string(word) + "\"");
    }
  }

  std::size_t size_at(const std::vector<std::string_view>& f, std::size_t k) {
    std::uint64_t v = 0;
    if (k >= f.size() || !detail::parse_uint(f[k], v)) error("expected a count");
    return static_cast<std::size_t>(v);
  }

  template <typename Dense>
  void read_rows(Dense& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      auto f = fields();
      if (static_cast<Eigen::Index>(f.size()) != m.cols()) {
        error("row has " + std::to_string(f.size()) + " values, expected " +
              std::to_string(m.cols()));
      }
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double v = 0.0;
        if (!detail::parse_double(f[c], v)) error("malformed number");
        m(r, c) = v;
      }
    }
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::kParse,
         path_.string() + ":" + std::to_string(lineno_) + ": " + what);
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string line_;
  std::size_t lineno_ = 0;
};

template <typename Dense>
void write_rows(std::ostream& out, const Dense& m, bool hex) {
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      if (hex) {
        out << detail::format_hex(m(r, c));
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
        out << buf;
      }
    }
    out << '\n';
  }
}

void write_factors(const LatentFactors& factors,
                   const std::filesystem::path& path, bool hex) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << kFactorMagic << ' ' << kFormatVersion << '\n';
  out << "U " << factors.U.rows() << ' ' << factors.U.cols() << '\n';
  write_rows(out, factors.U, hex);
  out << "V " << factors.V.rows() << ' ' << factors.V.cols() << '\n';
  write_rows(out, factors.V, hex);
  out << "end\n";
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace

void save_network(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << kNetworkMagic << ' ' << kFormatVersion << '\n';
  out << "variant " << to_string(model.variant) << '\n';
  Config hyper = config_from_hyper(model.hyper);
  out << "hyper " << hyper.entries().size() << '\n' << hyper.to_string();
  const auto& net = model.network;
  out << "layers " << net.num_layers() << '\n';
  if (net.num_layers() > 0) {
    out << "widths";
    for (auto w : net.widths) out << ' ' << w;
    out << '\n';
  }
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    out << "W " << l + 1 << ' ' << net.weights[l].rows() << ' '
        << net.weights[l].cols() << '\n';
    write_rows(out, net.weights[l], true);
    out << "b " << l + 1 << ' ' << net.biases[l].size() << '\n';
    write_rows(out, net.biases[l], true);
  }
  out << "end\n";
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

void load_network(const std::filesystem::path& path, Model& model) {
  Reader in(path);
  auto f = in.fields();
  in.expect(kNetworkMagic, f);
  if (in.size_at(f, 1) != kFormatVersion) in.error("unsupported version");
  f = in.fields();
  in.expect("variant", f);
  if (f.size() != 2) in.error("expected a variant name");
  model.variant = parse_variant(std::string(f[1]));
  f = in.fields();
  in.expect("hyper", f);
  std::size_t n = in.size_at(f, 1);
  std::string text;
  for (std::size_t k = 0; k < n; ++k) text += std::string(in.raw_line()) + "\n";
  Config config = Config::parse(text, path.string());
  // Stored lambdas may be zero (encoder-only); bypass the positivity check
  // by loading over a validated copy.
  for (const char* key : {"lambda_u", "lambda_v", "lambda_n", "lambda_w"}) {
    if (!config.contains(key)) in.error(std::string("hyper block lacks ") + key);
  }
  Config relaxed = config;
  relaxed.set("lambda_n", "1");
  model.hyper = hyper_from_config(relaxed);
  double lambda_n = 0.0;
  if (!detail::parse_double(*config.get("lambda_n"), lambda_n)) {
    in.error("malformed lambda_n");
  }
  model.hyper.lambda_n = lambda_n;

  f = in.fields();
  in.expect("layers", f);
  const std::size_t layers = in.size_at(f, 1);
  SdaeNetwork net;
  if (layers > 0) {
    f = in.fields();
    in.expect("widths", f);
    for (std::size_t k = 1; k < f.size(); ++k) net.widths.push_back(in.size_at(f, k));
    if (net.widths.size() != layers + 1) in.error("widths do not match layers");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    f = in.fields();
    in.expect("W", f);
    if (in.size_at(f, 1) != l + 1) in.error("layers out of order");
    Eigen::MatrixXd w(in.size_at(f, 2), in.size_at(f, 3));
    in.read_rows(w);
    f = in.fields();
    in.expect("b", f);
    Eigen::RowVectorXd b(in.size_at(f, 2));
    in.read_rows(b);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  f = in.fields();
  in.expect("end", f);
  if (layers > 0) net.validate();
  model.network = std::move(net);
}

void save_factors(const LatentFactors& factors,
                  const std::filesystem::path& path) {
  write_factors(factors, path, true);
}

void export_factors_text(const LatentFactors& factors,
                         const std::filesystem::path& path) {
  write_factors(factors, path, false);
}

LatentFactors load_factors(const std::filesystem::path& path) {
  Reader in(path);
  auto f = in.fields();
  in.expect(kFactorMagic, f);
  if (in.size_at(f, 1) != kFormatVersion) in.error("unsupported version");
  LatentFactors factors;
  f = in.fields();
  in.expect("U", f);
  factors.U.resize(in.size_at(f, 1), in.size_at(f, 2));
  in.read_rows(factors.U);
  f = in.fields();
  in.expect("V", f);
  factors.V.resize(in.size_at(f, 1), in.size_at(f, 2));
  in.read_rows(factors.V);
  f = in.fields();
  in.expect("end", f);
  if (factors.U.cols() != factors.V.cols()) in.error("U and V ranks differ");
  return factors;
}

void save_model(const Model& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  save_network(model, dir / "model.ckpt");
  save_factors(model.factors, dir / "factors.ckpt");
}

Model load_model(const std::filesystem::path& dir) {
  Model model;
  load_network(dir / "model.ckpt", model);
  model.factors = load_factors(dir / "factors.ckpt");
  if (model.has_network() &&
      static_cast<std::size_t>(model.factors.V.cols()) !=
          model.network.code_width()) {
    fail(ErrorKind::kValidation,
         dir.string() + ": factor rank differs from the network code width");
  }
  return model;
}

}  // namespace cdl
