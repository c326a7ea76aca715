#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "freqsift/cli.hpp"
#include "freqsift/wav.hpp"
#include "test_util.hpp"

using namespace freqsift;
using nlohmann::json;
using freqsift::testing::temp_dir;
using freqsift::testing::tone;
using freqsift::testing::tones;
namespace fs = std::filesystem;

namespace {

const std::string kBand = "band:0,1000,2000,4000;T=0.2;labels=low,mid,high";

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  o << text;
}

std::string save(const fs::path& dir, const std::string& name, const Signal& s) {
  const auto p = dir / name;
  wav::write(p, s);
  return p.string();
}

// Low tone dominating a weaker high tone.
Signal two_band() { return tones({{500.0, 0.5}, {3000.0, 0.3}}, 2048, 8000); }

fs::path corpus(const fs::path& dir) {
  const auto c = dir / "corpus";
  fs::create_directories(c);
  save(c, "a.wav", tones({{300.0, 0.4}, {2500.0, 0.1}}, 1024, 8000));
  save(c, "b.wav", tones({{1500.0, 0.4}, {700.0, 0.1}}, 1024, 8000));
  save(c, "c.wav", tones({{3500.0, 0.4}, {1200.0, 0.15}}, 1024, 8000));
  save(c, "d.wav", tones({{800.0, 0.3}, {3100.0, 0.25}}, 1024, 8000));
  return c;
}

fs::path twin_config(const fs::path& dir) {
  const json cfg{{"models",
                  {{{"id", "A"}, {"type", "band_energy"}, {"band_edges", {0, 1000, 2000, 4000}},
                    {"labels", {"low", "mid", "high"}}, {"temperature", 0.2}},
                   {{"id", "B"}, {"type", "band_energy"}, {"band_edges", {0, 1000, 2000, 4000}},
                    {"labels", {"low", "mid", "high"}}, {"temperature", 0.2}}}}};
  const auto p = dir / "twins.json";
  write_text(p, cfg.dump());
  return p;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"extract", "--help"}).code, 0);
  EXPECT_EQ(run({}).code, cli::kExitInput);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitInput);
  EXPECT_EQ(run({"extract", "--no-such-flag", "x.wav"}).code, cli::kExitInput);
}

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(cli::exit_code(ErrorKind::InvalidInput), 2);
  EXPECT_EQ(cli::exit_code(ErrorKind::InvalidParameter), 2);
  EXPECT_EQ(cli::exit_code(ErrorKind::Io), 2);
  EXPECT_EQ(cli::exit_code(ErrorKind::NotFound), 3);
  EXPECT_EQ(cli::exit_code(ErrorKind::BackendError), 4);
}

TEST(Cli, MissingFileIsInputError) {
  const auto dir = temp_dir("cli-missing");
  const auto r = run({"extract", (dir / "nope.wav").string(), "--oracle", kBand, "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, BadParametersAreInputErrors) {
  const auto dir = temp_dir("cli-params");
  const auto wav = save(dir, "s.wav", two_band());
  const auto out = (dir / "o").string();
  EXPECT_EQ(run({"extract", wav, "--oracle", kBand, "--delta", "1.5", "--out", out}).code, cli::kExitInput);
  EXPECT_EQ(run({"extract", wav, "--oracle", "band:0,1000;labels=a,b", "--out", out}).code, cli::kExitInput);
  EXPECT_EQ(run({"extract", wav, "--oracle", "bogus:1", "--out", out}).code, cli::kExitInput);
  EXPECT_EQ(run({"extract", wav, "--out", out}).code, cli::kExitInput);
  write_text(dir / "bad.json", "{not json");
  EXPECT_EQ(run({"extract", wav, "--oracle", kBand, "--config", (dir / "bad.json").string(), "--out", out}).code,
            cli::kExitInput);
}

TEST(Cli, ExtractWritesPartitioningArtifacts) {
  const auto dir = temp_dir("cli-extract");
  const Signal s = two_band();
  const auto wav = save(dir, "s.wav", s);
  const auto out = dir / "o";
  const auto r = run({"extract", wav, "--oracle", kBand, "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("class=low"), std::string::npos);
  EXPECT_NE(r.out.find("inverse=high"), std::string::npos);
  for (const char* name : {"sufficient.json", "complete.json", "sufficient.wav", "complete.wav", "inverse.wav",
                           "provenance.jsonl", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }

  // The complete subset and its inverse partition the spectrum, so they sum to the input.
  const Signal kept = wav::read(out / "complete.wav");
  const Signal inverse = wav::read(out / "inverse.wav");
  const Signal orig = wav::read(wav);
  ASSERT_EQ(kept.size(), orig.size());
  ASSERT_EQ(inverse.size(), orig.size());
  for (std::size_t t = 0; t < orig.size(); ++t) {
    EXPECT_NEAR(kept.samples()[t] + inverse.samples()[t], orig.samples()[t], 1e-6);
  }

  const json suff = read_json(out / "sufficient.json");
  EXPECT_EQ(suff["mask"]["n_bins"], 1025);
  const json comp = read_json(out / "complete.json");
  EXPECT_EQ(comp["inverse_defined"], true);

  const json m = read_json(out / "manifest.json");
  EXPECT_EQ(m["command"], "extract");
  EXPECT_EQ(m["version"], std::string(cli::tool_version()));
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
  EXPECT_FALSE(m["config"].contains("out"));
  EXPECT_TRUE(m["outputs"].contains("sufficient.wav"));
  EXPECT_EQ(m["outputs"].size(), 6u);
}

TEST(Cli, FlagsOverrideConfig) {
  const auto dir = temp_dir("cli-override");
  const auto wav = save(dir, "s.wav", two_band());
  write_text(dir / "c.json", R"({"delta": 0.3})");
  const auto out = dir / "o";
  ASSERT_EQ(run({"extract", wav, "--oracle", kBand, "--config", (dir / "c.json").string(), "--delta", "0.7",
                 "--out", out.string()}).code, 0);
  EXPECT_DOUBLE_EQ(read_json(out / "manifest.json")["config"]["delta"].get<double>(), 0.7);
  EXPECT_DOUBLE_EQ(read_json(out / "sufficient.json")["delta"].get<double>(), 0.7);
}

TEST(Cli, StrictCompleteWithoutFlipIsNotFound) {
  const auto dir = temp_dir("cli-strict");
  // A lone tone with exactly representable samples (0, a, 0, -a): removing it
  // leaves silence, which still ties to the first class.
  const auto wav = save(dir, "s.wav", tone(2000, 0.5, 1024, 8000));
  const std::string lowhigh = "band:0,3000,4000;labels=low,high";
  const auto out = (dir / "o").string();
  const auto lax = run({"extract", wav, "--oracle", lowhigh, "--out", out});
  ASSERT_EQ(lax.code, 0) << lax.err;
  EXPECT_NE(lax.out.find("inverse=undefined"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "o" / "inverse.wav"));
  EXPECT_EQ(run({"extract", wav, "--oracle", lowhigh, "--strict-complete", "--out", out}).code, cli::kExitNotFound);
}

TEST(Cli, VerifyAcceptsResultAndRejectsEmptyMask) {
  const auto dir = temp_dir("cli-verify");
  const auto wav = save(dir, "s.wav", two_band());
  const auto out = dir / "o";
  ASSERT_EQ(run({"extract", wav, "--oracle", kBand, "--out", out.string()}).code, 0);
  const auto ok = run({"verify", wav, "--oracle", kBand, "--mask", (out / "sufficient.json").string()});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(json::parse(ok.out)["sufficient"], true);

  json empty = read_json(out / "sufficient.json")["mask"];
  empty["rle"] = {empty["n_bins"]};
  write_text(dir / "empty.json", empty.dump());
  const auto bad = run({"verify", wav, "--oracle", kBand, "--mask", (dir / "empty.json").string()});
  EXPECT_EQ(bad.code, cli::kExitNotFound);
  EXPECT_EQ(json::parse(bad.out)["sufficient"], false);

  write_text(dir / "short.json", R"({"n_bins": 1025, "rle": [3]})");
  EXPECT_EQ(run({"verify", wav, "--oracle", kBand, "--mask", (dir / "short.json").string()}).code, cli::kExitInput);
}

TEST(Cli, HandshakeFailureIsBackendError) {
  const auto dir = temp_dir("cli-handshake");
  const auto wav = save(dir, "s.wav", two_band());
  const std::string spec = std::string("stdio:") + FAKE_ORACLE + " --mode no-handshake";
  const auto r = run({"extract", wav, "--oracle", spec, "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitBackend) << r.err;
  const auto c = corpus(dir);
  EXPECT_EQ(run({"matrix", c.string(), "--oracle", kBand, "--oracle", spec, "--out", (dir / "m").string()}).code,
            cli::kExitBackend);
}

TEST(Cli, MatrixOfIdenticalModelsIsAllOnes) {
  const auto dir = temp_dir("cli-matrix");
  const auto c = corpus(dir);
  const auto out = dir / "o";
  const auto r = run({"matrix", c.string(), "--config", twin_config(dir).string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "source,A,B,avg\nA,,1.000000,1.000000\nB,1.000000,,1.000000\n");
  EXPECT_EQ(slurp(out / "matrix.csv"), r.out);
  const json m = read_json(out / "matrix.json");
  EXPECT_EQ(m["rows"].size(), 2u);
  std::istringstream lines(slurp(out / "verdicts.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) ++n;
  }
  EXPECT_EQ(n, 4u * 2u);
}

TEST(Cli, MatrixOutputsAreByteIdentical) {
  const auto dir = temp_dir("cli-determinism");
  const auto c = corpus(dir);
  const auto cfg = twin_config(dir).string();
  const std::string shifted = "band:0,500,3000,4000;T=0.2;labels=low,mid,high";
  ASSERT_EQ(run({"matrix", c.string(), "--config", cfg, "--oracle", shifted, "--out", (dir / "r1").string()}).code, 0);
  ASSERT_EQ(run({"matrix", c.string(), "--config", cfg, "--oracle", shifted, "--workers", "3", "--out",
                 (dir / "r2").string()}).code, 0);
  for (const char* name : {"matrix.csv", "matrix.json", "verdicts.jsonl"}) {
    EXPECT_EQ(slurp(dir / "r1" / name), slurp(dir / "r2" / name)) << name;
  }
  const json m1 = read_json(dir / "r1" / "manifest.json");
  const json m2 = read_json(dir / "r2" / "manifest.json");
  EXPECT_EQ(m1["config_hash"], m2["config_hash"]);
  EXPECT_EQ(m1["outputs"], m2["outputs"]);
}

TEST(Cli, EmptyCorpusIsInputError) {
  const auto dir = temp_dir("cli-empty");
  fs::create_directories(dir / "none");
  EXPECT_EQ(run({"matrix", (dir / "none").string(), "--oracle", kBand, "--out", (dir / "o").string()}).code,
            cli::kExitInput);
  EXPECT_EQ(run({"matrix", "--oracle", kBand, "--out", (dir / "o").string()}).code, cli::kExitInput);
}

TEST(Cli, ComposeSingleInputHasDegreeOne) {
  const auto dir = temp_dir("cli-compose");
  const auto wav = save(dir, "s.wav", two_band());
  const auto out = dir / "o";
  const auto r = run({"compose", wav, "--oracle", kBand, "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out / "degree.csv"), r.out);
  EXPECT_NE(r.out.find("low,1,1,1.000000"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(out / "composite_low.wav"));
  EXPECT_EQ(run({"compose", wav, "--oracle", kBand, "--class", "high", "--out", out.string()}).code,
            cli::kExitNotFound);
}

TEST(Cli, TransplantZeroCompositeNeverFlips) {
  const auto dir = temp_dir("cli-transplant");
  const auto zero = save(dir, "zero.wav", Signal::zeros(1024, 8000));
  const auto c = corpus(dir);
  const auto out = dir / "o";
  for (const char* mode : {"add", "replace"}) {
    const auto r = run({"transplant", c.string(), "--composite", zero, "--mode", mode, "--oracle", kBand,
                        "--write-wavs", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json rep = json::parse(r.out);
    EXPECT_GT(rep["targets"].get<int>(), 0);
    EXPECT_EQ(rep["flipped"], 0);
    EXPECT_DOUBLE_EQ(rep["flip_rate"].get<double>(), 0.0);
  }
  EXPECT_EQ(run({"transplant", c.string(), "--composite", zero, "--mode", "sideways", "--oracle", kBand, "--out",
                 out.string()}).code, cli::kExitInput);
}

TEST(Cli, MetricsOnIdenticalPair) {
  const auto dir = temp_dir("cli-metrics");
  const auto s = save(dir, "s.wav", freqsift::testing::voiced(32000, 16000, 140.0, 3));
  write_text(dir / "pairs.csv", s + "," + s + "\n");
  write_text(dir / "ref.txt", "the quick brown fox\n");
  write_text(dir / "hyp.txt", "the quick brown fox\n");
  write_text(dir / "tr.csv", (dir / "ref.txt").string() + "," + (dir / "hyp.txt").string() + "\n");
  const auto out = dir / "o";
  const auto r = run({"metrics", s, "--pairs", (dir / "pairs.csv").string(), "--transcripts",
                      (dir / "tr.csv").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = read_json(out / "metrics.json");
  EXPECT_GE(m["stoi"][0]["stoi"].get<double>(), 0.99);
  EXPECT_EQ(m["levenshtein"][0]["distance"], 0);
  EXPECT_DOUBLE_EQ(m["levenshtein"][0]["ratio"].get<double>(), 1.0);
  EXPECT_EQ(m["levenshtein_level"], "char");
  for (const char* name : {"entropy.csv", "psd_s.csv", "stoi.csv", "levenshtein.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }
  EXPECT_EQ(run({"metrics", "--out", out.string()}).code, cli::kExitInput);
  EXPECT_EQ(run({"metrics", s, "--level", "byte", "--out", out.string()}).code, cli::kExitInput);
}
