#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ianforge/cli.hpp"

using namespace ianforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("ianforge_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write(const std::string& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

}  // namespace

TEST_CASE("usage errors exit with code 2", "[cli]") {
    REQUIRE(run_command({"no-such-command"}) == kExitUsage);
    REQUIRE(run_command({"make-data", "--nope", "1"}) == kExitUsage);
    REQUIRE(run_command({}) == kExitUsage);
}

TEST_CASE("make-data is deterministic and validates n", "[cli]") {
    TempDir tmp;
    const std::string a = tmp / "a.csv";
    const std::string b = tmp / "b.csv";
    REQUIRE(run_command({"make-data", "--kind", "ring", "--n", "50", "--seed", "9", "--out", a}) == kExitOk);
    REQUIRE(run_command({"make-data", "--kind", "ring", "--n", "50", "--seed", "9", "--out", b}) == kExitOk);
    REQUIRE(slurp(a) == slurp(b));
    REQUIRE(run_command({"make-data", "--kind", "ring", "--n", "0", "--out", tmp / "x.csv"}) == kExitRuntime);
    REQUIRE(run_command({"make-data", "--kind", "dodecahedra", "--n", "5", "--out", tmp / "x.csv"}) ==
            kExitRuntime);
}

TEST_CASE("train / sample / bound-check / eval pipeline on a tiny fixture", "[cli][slow]") {
    TempDir tmp;
    const std::string x_csv = tmp / "x.csv";
    const std::string y_csv = tmp / "y.csv";
    REQUIRE(run_command({"make-data", "--kind", "blobs", "--n", "48", "--seed", "1", "--out", x_csv}) == kExitOk);
    REQUIRE(run_command({"make-data", "--kind", "shifted", "--n", "48", "--seed", "2", "--out", y_csv}) == kExitOk);

    const std::string comp = tmp / "comp.kgan1";
    REQUIRE(run_command({"pretrain-comparator", "--x", x_csv, "--out", comp, "--mode", "random", "--seed",
                         "3"}) == kExitOk);

    const std::string cfg_path = tmp / "train.ini";
    write(cfg_path,
          "[data]\nmode = points2d\nx = " + x_csv + "\ny = " + y_csv +
              "\n[model]\nlatent_dim = 4\ng_hidden = 8\nd_hidden = 8\ncomparator = " + comp +
              "\n[train]\nmodel = kgan\nsteps = 12\nbatch = 8\nseed = 5\nk = 3\n");

    const std::string ckpt_a = tmp / "g_a.kgan1";
    const std::string ckpt_b = tmp / "g_b.kgan1";
    REQUIRE(run_command({"train", "--config", cfg_path, "--out", ckpt_a}) == kExitOk);
    REQUIRE(run_command({"train", "--config", cfg_path, "--out", ckpt_b}) == kExitOk);
    REQUIRE(slurp(ckpt_a) == slurp(ckpt_b));  // byte-identical checkpoints
    REQUIRE(slurp(ckpt_a + ".log.csv") == slurp(ckpt_b + ".log.csv"));
    REQUIRE(!slurp(ckpt_a).empty());

    {
        std::ifstream log(ckpt_a + ".log.csv");
        std::string header;
        std::getline(log, header);
        REQUIRE(header == "step,loss_d,loss_g,loss_knn_hi,loss_knn_lo,loss_cyc,utilization");
    }

    const std::string samples = tmp / "samples.csv";
    const std::string qfeat = tmp / "qfeat.kgan1";
    REQUIRE(run_command({"sample", "--ckpt", ckpt_a, "--n", "20", "--seed", "8", "--out", samples,
                         "--comparator", comp, "--features-out", qfeat}) == kExitOk);
    const std::string yfeat = tmp / "yfeat.kgan1";
    REQUIRE(run_command({"sample", "--from-data", y_csv, "--n", "0", "--comparator", comp,
                         "--features-out", yfeat}) == kExitOk);

    REQUIRE(run_command({"bound-check", "--features", yfeat, "--queries", qfeat, "--k", "4"}) == kExitOk);

    const std::string clf = tmp / "clf.kgan1";
    REQUIRE(run_command({"pretrain-comparator", "--x", x_csv, "--y", y_csv, "--out", clf, "--mode",
                         "classifier", "--steps", "40", "--seed", "6"}) == kExitOk);
    const std::string cfg_eval = tmp / "eval.ini";
    write(cfg_eval, "[data]\nmode = points2d\nx = " + x_csv + "\ny = " + y_csv +
                        "\n[eval]\nn_noise = 200\nseed = 11\nclassifier = " + clf + "\n");
    const std::string report = tmp / "report.csv";
    REQUIRE(run_command({"eval", "--config", cfg_eval, "--samples", samples, "--out", report}) == kExitOk);
    const std::string rep = slurp(report);
    REQUIRE(rep.rfind("score_x,score_y,score_avg,err_x,err_y,err_avg,n_samples,config_hash", 0) == 0);
}

TEST_CASE("translator, cascade and traverse commands", "[cli][slow]") {
    TempDir tmp;
    const std::string x_csv = tmp / "x.csv";
    const std::string y_csv = tmp / "y.csv";
    REQUIRE(run_command({"make-data", "--kind", "blobs", "--n", "32", "--seed", "1", "--out", x_csv}) == kExitOk);
    REQUIRE(run_command({"make-data", "--kind", "shifted", "--n", "32", "--seed", "2", "--out", y_csv}) == kExitOk);

    const std::string cfg_path = tmp / "cfg.ini";
    write(cfg_path, "[data]\nmode = points2d\nx = " + x_csv + "\ny = " + y_csv +
                        "\n[model]\nlatent_dim = 4\ng_hidden = 8\nd_hidden = 8\nt_hidden = 8\n"
                        "[train]\nsteps = 10\nbatch = 8\nseed = 5\n");

    const std::string tckpt = tmp / "t.kgan1";
    REQUIRE(run_command({"train-translator", "--config", cfg_path, "--out", tckpt}) == kExitOk);

    const std::string gckpt = tmp / "g.kgan1";
    REQUIRE(run_command({"train", "--config", cfg_path, "--out", gckpt}) == kExitOk);

    const std::string ft = tmp / "t_ft.kgan1";
    REQUIRE(run_command({"fine-tune", "--config", cfg_path, "--translator", tckpt, "--sampler", gckpt,
                         "--out", ft, "--steps", "0"}) == kExitOk);
    REQUIRE(slurp(ft) == slurp(tckpt));  // zero fine-tune steps: checkpoint unchanged

    const std::string casc = tmp / "cascade.csv";
    REQUIRE(run_command({"cascade", "--sampler", gckpt, "--translator", tckpt, "--n", "10", "--seed", "4",
                         "--out", casc}) == kExitOk);
    REQUIRE(!slurp(casc).empty());

    // autoencoder-variant training for the traversal path
    const std::string cfg_ae = tmp / "cfg_ae.ini";
    write(cfg_ae, "[data]\nmode = points2d\nx = " + x_csv + "\ny = " + y_csv +
                      "\n[model]\nlatent_dim = 4\ng_hidden = 8\nd_hidden = 8\ndisc_variant = autoencoder\n"
                      "[train]\nsteps = 6\nbatch = 8\nseed = 7\n");
    const std::string ae_ckpt = tmp / "ae.kgan1";
    REQUIRE(run_command({"train", "--config", cfg_ae, "--out", ae_ckpt}) == kExitOk);

    const std::string grid = tmp / "grid.csv";
    REQUIRE(run_command({"traverse", "--disc", ae_ckpt, "--translators", tckpt, "--data", x_csv, "--ia",
                         "0", "--ib", "3", "--n", "5", "--out", grid}) == kExitOk);
    const std::string g = slurp(grid);
    REQUIRE(g.rfind("row,col,x0,x1", 0) == 0);
    // 2 rows x 5 cols plus header
    REQUIRE(std::count(g.begin(), g.end(), '\n') == 11);

    // classifier discriminator is rejected for traversal
    REQUIRE(run_command({"traverse", "--disc", gckpt, "--data", x_csv, "--out", tmp / "no.csv"}) ==
            kExitRuntime);
}

TEST_CASE("grad-check and bench-knn", "[cli]") {
    REQUIRE(run_command({"grad-check", "--seed", "3"}) == kExitOk);
    REQUIRE(run_command({"bench-knn", "--m", "2000", "--queries", "50", "--k", "4", "--seed", "1"}) ==
            kExitOk);
}
