#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "feedtype/error.hpp"
#include "feedtype/experiments.hpp"

namespace feedtype::experiments {

std::string_view version() { return "0.1.0"; }

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorCode::Io, "sha256 failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "feedtype";
  j["version"] = version;
  j["experiment"] = kind;
  j["config_sha256"] = config_sha256;
  j["seed"] = seed;
  j["workers"] = workers;
  j["all_pass"] = all_pass;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}, {"rows", o.rows}});
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : stages) j["stages"].push_back({{"name", s.name}, {"seconds", s.seconds}});
  return j.dump(2) + "\n";
}

RunManifest run(const ExperimentConfig& config, const std::filesystem::path& out, std::uint64_t seed,
                const ExecPolicy& policy) {
  const ExperimentResult res = run_experiment(config, seed, policy);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::Io, fmt::format("cannot create {}: {}", out.string(), ec.message()));

  RunManifest m;
  m.kind = std::string(to_string(config.kind));
  m.config_sha256 = sha256_hex(config.source_text);
  m.seed = seed;
  m.workers = policy.resolved();
  m.version = std::string(version());
  m.stages = res.stages;
  m.all_pass = res.all_pass;

  auto write = [&](const std::string& name, const std::string& bytes) {
    std::ofstream f(out / name, std::ios::binary | std::ios::trunc);
    f << bytes;
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (out / name).string());
  };
  for (const auto& t : res.tables) {
    const std::string bytes = to_csv(t);
    const std::string file = t.name + ".csv";
    write(file, bytes);
    m.outputs.push_back({file, sha256_hex(bytes), t.rows.size()});
  }
  write("manifest.json", m.to_json());
  return m;
}

}  // namespace feedtype::experiments
