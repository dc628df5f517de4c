#include "cdl/manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "cdl/error.hpp"
#include "text_util.hpp"

#ifndef CDL_VERSION_STRING
#define CDL_VERSION_STRING "0.0.0"
#endif

namespace cdl {

const char* version_string() noexcept { return CDL_VERSION_STRING; }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::kIo, "SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  if (in.bad()) fail(ErrorKind::kIo, "failed reading " + path.string());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  char two[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(two, sizeof two, "%02x", digest[k]);
    hex += two;
  }
  return hex;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs.push_back(path.string());
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "cdl-manifest 1\n";
  out << "command\t" << command << '\n';
  out << "version\t" << version << '\n';
  out << "seed\t" << seed << '\n';
  for (const auto& [p, d] : inputs) out << "input\t" << d << '\t' << p << '\n';
  for (const auto& p : outputs) out << "output\t" << p << '\n';
  out << "config\n" << config.to_string() << "end\n";
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "cdl-manifest 1") {
    fail(ErrorKind::kParse, path.string() + ": not a run manifest");
  }
  RunManifest m;
  m.version.clear();
  while (std::getline(in, line)) {
    if (line == "config") break;
    auto fields = detail::split_on(line, '\t');
    const std::string tag(fields.empty() ? std::string_view() : fields[0]);
    if (tag == "command" && fields.size() >= 2) {
      m.command = std::string(fields[1]);
    } else if (tag == "version" && fields.size() >= 2) {
      m.version = std::string(fields[1]);
    } else if (tag == "seed" && fields.size() == 2) {
      if (!detail::parse_uint(fields[1], m.seed)) {
        fail(ErrorKind::kParse, path.string() + ": bad seed");
      }
    } else if (tag == "input" && fields.size() == 3) {
      m.inputs.emplace_back(std::string(fields[2]), std::string(fields[1]));
    } else if (tag == "output" && fields.size() == 2) {
      m.outputs.emplace_back(fields[1]);
    } else {
      fail(ErrorKind::kParse, path.string() + ": unexpected line \"" + line + "\"");
    }
  }
  std::string text;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    text += line + "\n";
  }
  if (!ended) fail(ErrorKind::kParse, path.string() + ": truncated manifest");
  m.config = Config::parse(text, path.string());
  return m;
}

}  // namespace cdl
