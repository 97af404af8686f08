#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "irstd/dataset.hpp"
#include "irstd/image_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(IRSTD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

/// A small synthetic corpus shared by the tests below.
const fs::path& corpus() {
  static const fs::path root = [] {
    const fs::path dir = testing::scratch_dir("cli_corpus");
    const int rc = run_cli("synth --out-dir " + dir.string() + " --seed 7 --count 4 --size 64", dir / "log.txt");
    REQUIRE(rc == 0);
    fs::remove(dir / "log.txt");
    return dir;
  }();
  return root;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("synth is idempotent for a seed") {
    const fs::path a = testing::scratch_dir("cli_synth_a"), b = testing::scratch_dir("cli_synth_b");
    const fs::path log = testing::scratch_dir("cli_synth_log") / "log.txt";
    CHECK(run_cli("synth --out-dir " + a.string() + " --seed 7 --count 3 --size 64", log) == 0);
    CHECK(run_cli("synth --out-dir " + b.string() + " --seed 7 --count 3 --size 64", log) == 0);
    const auto first = tree(a);
    CHECK(first.size() == 8);  // 3 images, 3 masks, manifest, generator settings
    CHECK(first == tree(b));
    CHECK(run_cli("synth --out-dir " + a.string() + " --seed 7 --count 2 --size 64", log) == 0);
    CHECK(run_cli("synth --out-dir " + a.string() + " --seed 7 --count 3 --size 64", log) == 0);
    CHECK(tree(a) == first);
  }

  TEST_CASE("detect writes saliency, mask and timing") {
    const fs::path out = testing::scratch_dir("cli_detect");
    const fs::path input = corpus() / "images" / "synth_00000.png";
    for (const char* method : {"mpcm", "ipi"}) {
      const fs::path dir = out / method;
      REQUIRE(run_cli(std::string("detect --method ") + method + " --input " + input.string() + " --out-dir " +
                          dir.string(),
                      out / "log.txt") == 0);
      CHECK(fs::exists(dir / "synth_00000_saliency.png"));
      CHECK(fs::exists(dir / "synth_00000_saliency.json"));
      CHECK(fs::exists(dir / "synth_00000_mask.png"));
      const json j = read_json(dir / "synth_00000_detection.json");
      CHECK(j["method"] == method);
      CHECK(j["total_ms"].get<double>() > 0.0);
      CHECK(j["timing"].size() >= 2);
      CHECK(j.contains("converged"));
      const irstd::BinaryMask m = irstd::io::read_mask(dir / "synth_00000_mask.png");
      CHECK(m.height() == 64);
    }
    CHECK(read_json(out / "ipi" / "synth_00000_detection.json").contains("lambda"));
  }

  TEST_CASE("usage errors exit 2 without output") {
    const fs::path base = testing::scratch_dir("cli_usage");
    const fs::path input = corpus() / "images" / "synth_00000.png";
    CHECK(run_cli("detect --method sobel --input " + input.string() + " --out-dir " + (base / "a").string(),
                  base / "log.txt") == 2);
    CHECK(slurp(base / "log.txt").find("unknown method") != std::string::npos);
    CHECK_FALSE(fs::exists(base / "a"));
    CHECK(run_cli("detect --method mpcm --input " + (base / "nope.png").string() + " --out-dir " +
                      (base / "b").string(),
                  base / "log.txt") == 2);
    CHECK_FALSE(fs::exists(base / "b"));
    CHECK(run_cli("", base / "log.txt") == 2);
    CHECK(run_cli("bench --suite mpcm --runs 3", base / "log.txt") == 2);
    CHECK(run_cli("bench --suite fft", base / "log.txt") == 2);
  }

  TEST_CASE("eval identity, empty predictions and stem mismatch") {
    const fs::path base = testing::scratch_dir("cli_eval");
    const fs::path gt = corpus() / "masks";
    CHECK(run_cli("eval --pred-dir " + gt.string() + " --gt-dir " + gt.string() + " --out " +
                      (base / "same.json").string(),
                  base / "log.txt") == 0);
    const json same = read_json(base / "same.json");
    CHECK(same["iou"] == 1.0);
    CHECK(same["niou"] == 1.0);

    fs::create_directories(base / "empty");
    for (const auto& e : fs::directory_iterator(gt)) {
      const irstd::BinaryMask m = irstd::io::read_mask(e.path());
      irstd::io::write_mask(base / "empty" / (e.path().stem().string() + "_mask.png"),
                            irstd::BinaryMask(m.height(), m.width()));
    }
    CHECK(run_cli("eval --pred-dir " + (base / "empty").string() + " --gt-dir " + gt.string() + " --out " +
                      (base / "empty.json").string(),
                  base / "log.txt") == 0);
    CHECK(read_json(base / "empty.json")["iou"] == 0.0);

    fs::remove(base / "empty" / "synth_00001_mask.png");
    CHECK(run_cli("eval --pred-dir " + (base / "empty").string() + " --gt-dir " + gt.string(), base / "log.txt") ==
          2);
    CHECK(slurp(base / "log.txt").find("synth_00001") != std::string::npos);
  }

  TEST_CASE("roc rows are monotone as the threshold descends") {
    const fs::path base = testing::scratch_dir("cli_roc");
    REQUIRE(run_cli("roc --method mpcm --corpus " + corpus().string() + " --thresholds 50 --out " +
                        (base / "roc.csv").string(),
                    base / "log.txt") == 0);
    std::istringstream in(slurp(base / "roc.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "threshold,fa,pd");
    double prev_t = HUGE_VAL, prev_fa = -1.0, prev_pd = -1.0;
    int rows = 0;
    while (std::getline(in, line)) {
      double t, fa, pd;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &fa, &pd) == 3);
      CHECK(t < prev_t);
      CHECK(fa >= prev_fa);
      CHECK(pd >= prev_pd);
      prev_t = t;
      prev_fa = fa;
      prev_pd = pd;
      ++rows;
    }
    CHECK(rows == 50);
  }

  TEST_CASE("stats match the generator plan") {
    const fs::path base = testing::scratch_dir("cli_stats");
    REQUIRE(run_cli("stats --corpus " + corpus().string() + " --out " + (base / "stats.json").string(),
                    base / "log.txt") == 0);
    const json j = read_json(base / "stats.json");
    irstd::SynthConfig cfg;
    cfg.seed = 7;
    cfg.count = 4;
    cfg.height = cfg.width = 64;
    std::map<int, int> plan;
    std::size_t targets = 0;
    for (const auto& s : irstd::synth_generate(cfg)) {
      ++plan[static_cast<int>(s.planted.size())];
      targets += s.planted.size();
    }
    CHECK(j["images"] == 4);
    CHECK(j["targets"] == targets);
    for (const auto& [k, v] : plan) CHECK(j["target_count_histogram"][std::to_string(k)] == v);
  }

  TEST_CASE("gradcheck passes by default and fails an impossible limit") {
    const fs::path base = testing::scratch_dir("cli_grad");
    CHECK(run_cli("gradcheck --out " + (base / "g.json").string(), base / "log.txt") == 0);
    const json j = read_json(base / "g.json");
    CHECK(j["passed"] == true);
    for (const char* v : {"ACM", "BiLocal", "BiGlobal", "TopDownLocal"}) CHECK(j[v]["max_rel_error"] <= 1e-4);
    CHECK(run_cli("gradcheck --limit 0", base / "log.txt") == 1);
  }
}
