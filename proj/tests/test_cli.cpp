// Drives the installed CLI binary end to end. FTSQA_CLI_PATH is injected
// by the build.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static unsigned counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("ftsqa_cli_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(FTSQA_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::string output((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {status == 0 ? 0 : 1, output};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("synth, split, train, eval, predict, gradcheck pipeline") {
  TempDir dir;
  const std::string log = dir.file("log.txt");

  RunResult r = run_cli("synth --answers 4 --per-answer 8 --signature 2 --noise 4 --seed 21 --out " +
                            dir.file("data.jsonl"),
                        log);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("32 questions") != std::string::npos);

  r = run_cli("split --dataset " + dir.file("data.jsonl") + " --seed 21 --min-answer-count 1", log);
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(dir.file("data.jsonl.train")));
  CHECK(std::filesystem::exists(dir.file("data.jsonl.valid")));
  CHECK(std::filesystem::exists(dir.file("data.jsonl.test")));
  CHECK(r.output.find("24 train, 4 valid, 4 test") != std::string::npos);

  r = run_cli("train --dataset " + dir.file("data.jsonl.train") + " --valid " +
                  dir.file("data.jsonl.valid") + " --out " + dir.file("run") +
                  " --epochs 4 --hidden-dim 8 --embed-dim 8 --batch-size 8 --lr 0.01" +
                  " --dropout 0.2 --train-embeddings true --seed 3",
              log);
  CHECK(r.exit_code == 0);
  // the resolved config is echoed before training
  CHECK(r.output.find("lr = 0.01") != std::string::npos);
  CHECK(r.output.find("momentum = 0.8") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("run/best.ckpt")));
  CHECK(std::filesystem::exists(dir.file("run/metrics.jsonl")));
  {
    std::istringstream metrics(slurp(dir.file("run/metrics.jsonl")));
    std::string line;
    int lines = 0;
    while (std::getline(metrics, line)) {
      CHECK(line.find("\"epoch\"") != std::string::npos);
      CHECK(line.find("\"mean_loss\"") != std::string::npos);
      CHECK(line.find("\"val_acc_innerp\"") != std::string::npos);
      ++lines;
    }
    CHECK(lines == 4);
  }

  r = run_cli("eval --checkpoint " + dir.file("run/best.ckpt") + " --dataset " +
                  dir.file("data.jsonl.test"),
              log);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("accuracy (innerp):") != std::string::npos);

  r = run_cli("eval --checkpoint " + dir.file("run/best.ckpt") + " --dataset " +
                  dir.file("data.jsonl.test") + " --eval-method lr --lr-train " +
                  dir.file("data.jsonl.train"),
              log);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("accuracy (lr):") != std::string::npos);

  r = run_cli("predict --checkpoint " + dir.file("run/best.ckpt") + " --dataset " +
                  dir.file("data.jsonl.test") + " --out " + dir.file("pred.tsv"),
              log);
  CHECK(r.exit_code == 0);
  const std::string tsv = slurp(dir.file("pred.tsv"));
  CHECK(!tsv.empty());
  std::size_t first_line_tabs = 0;
  for (char c : tsv.substr(0, tsv.find('\n'))) first_line_tabs += c == '\t';
  CHECK(first_line_tabs == 3);

  r = run_cli("gradcheck --instances 2", log);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("PASS") != std::string::npos);
}

TEST_CASE("config file with flag overrides") {
  TempDir dir;
  const std::string log = dir.file("log.txt");
  {
    std::ofstream conf(dir.file("run.conf"));
    conf << "epochs = 9\nhidden_dim = 8\nembed_dim = 8\nlr = 0.01\nbatch_size = 8\n"
            "dropout = 0\ntrain_embeddings = true\n";
  }
  run_cli("synth --answers 3 --per-answer 4 --signature 2 --noise 2 --seed 5 --out " +
              dir.file("d.jsonl"),
          log);
  // --epochs on the command line beats the config file's 9
  RunResult r = run_cli("--config " + dir.file("run.conf") + " train --dataset " +
                            dir.file("d.jsonl") + " --out " + dir.file("run") + " --epochs 2",
                        log);
  CHECK(r.exit_code == 0);
  std::istringstream metrics(slurp(dir.file("run/metrics.jsonl")));
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) ++lines;
  CHECK(lines == 2);
}

TEST_CASE("pretrained embeddings flow through training") {
  TempDir dir;
  const std::string log = dir.file("log.txt");
  {
    // 8-dimensional GloVe-format vectors for a handmade corpus
    std::ofstream emb(dir.file("vectors.txt"));
    const char* words[] = {"red", "green", "blue", "fruit", "sky", "leaf"};
    int k = 0;
    for (const char* w : words) {
      emb << w;
      for (int j = 0; j < 8; ++j) emb << " " << (0.1 * ((k + j) % 7) - 0.3);
      emb << "\n";
      ++k;
    }
  }
  {
    std::ofstream data(dir.file("qa.jsonl"));
    data << R"({"question": ["the sky is blue today.", "look up at it."], "answer": "sky"})"
         << "\n"
         << R"({"question": ["a ripe red fruit.", "it grows on trees."], "answer": "fruit"})"
         << "\n"
         << R"({"question": ["the green leaf."], "answer": "leaf"})"
         << "\n"
         << R"({"question": ["blue above us."], "answer": "sky"})"
         << "\n"
         << R"({"question": ["red and sweet."], "answer": "fruit"})"
         << "\n"
         << R"({"question": ["green and flat."], "answer": "leaf"})"
         << "\n";
  }
  RunResult r = run_cli("train --dataset " + dir.file("qa.jsonl") + " --embeddings " +
                            dir.file("vectors.txt") + " --embed-dim 8 --hidden-dim 8" +
                            " --epochs 2 --batch-size 2 --dropout 0.2 --out " + dir.file("run"),
                        log);
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(dir.file("run/final.ckpt")));

  r = run_cli("eval --checkpoint " + dir.file("run/final.ckpt") + " --dataset " +
                  dir.file("qa.jsonl"),
              log);
  CHECK(r.exit_code == 0);
}

TEST_CASE("failures exit non-zero with a message") {
  TempDir dir;
  const std::string log = dir.file("log.txt");
  RunResult r = run_cli("eval --checkpoint " + dir.file("absent.ckpt") + " --dataset " +
                            dir.file("absent.jsonl"),
                        log);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error:") != std::string::npos);

  r = run_cli("train --dataset " + dir.file("nope.jsonl") + " --out " + dir.file("x"), log);
  CHECK(r.exit_code == 1);

  // invalid flag value caught by config validation, naming the key
  run_cli("synth --answers 2 --per-answer 2 --signature 2 --noise 2 --out " + dir.file("t.jsonl"),
          log);
  r = run_cli("train --dataset " + dir.file("t.jsonl") + " --out " + dir.file("y") +
                  " --dropout 1.5",
              log);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("dropout") != std::string::npos);
}
