#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "rfq/io.hpp"

namespace pipeline_run {

struct Step {
  int code = 0;
  std::string out;
  std::string err;
};

inline Step cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Step s;
  s.code = rfq::cli::run_cli(args, out, err);
  s.out = out.str();
  s.err = err.str();
  return s;
}

struct Artifacts {
  bool ok = false;
  std::string failure;
  std::string dataset;
  std::string quotes;
  std::string outcomes;
  std::string summary;
  /// Every file the run wrote, by name.
  std::map<std::string, std::string> files;
};

/// simulate -> featurize -> train ensemble and next_mid -> quote -> compete, all at defaults, in dir.
inline Artifacts run_default(const std::filesystem::path& dir, unsigned seed = 42) {
  namespace fs = std::filesystem;
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };
  const std::string s = std::to_string(seed);
  const std::vector<std::vector<std::string>> steps{
      {"simulate", "--seed", s, "--out", p("data.csv")},
      {"featurize", "--data", p("data.csv"), "--out", p("features.csv")},
      {"train", "--model", "ensemble", "--data", p("data.csv"), "--seed", s, "--out", p("ensemble.json")},
      {"train", "--model", "next_mid", "--data", p("data.csv"), "--seed", s, "--out", p("next_mid.json")},
      {"quote", "--data", p("data.csv"), "--models", p("ensemble.json") + "," + p("next_mid.json"),
       "--seed", s, "--out", p("quotes.csv")},
      {"compete", "--data", p("data.csv"), "--models", p("ensemble.json") + "," + p("next_mid.json"),
       "--seed", s, "--out", p("compete.csv")}};
  Artifacts a;
  for (const auto& args : steps) {
    const Step r = cli(args);
    if (r.code != 0) {
      a.failure = args[0] + " exited " + std::to_string(r.code) + ": " + r.err;
      return a;
    }
    a.summary = r.out;
  }
  a.dataset = rfq::io::read_file(dir / "data.csv");
  a.quotes = rfq::io::read_file(dir / "quotes.csv");
  a.outcomes = rfq::io::read_file(dir / "compete.csv");
  for (const auto& entry : fs::directory_iterator(dir)) {
    a.files[entry.path().filename().string()] = rfq::io::read_file(entry.path());
  }
  a.ok = true;
  return a;
}

}  // namespace pipeline_run
