#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nuseg/imageio.hpp"
#include "nuseg/image.hpp"
#include "synth.hpp"
#include "testutil.hpp"

using testutil::TempDir;

namespace {

std::string cli_path() {
#ifdef NUSEG_CLI_PATH
    return NUSEG_CLI_PATH;
#else
    const char* env = std::getenv("NUSEG_BIN");
    REQUIRE_MESSAGE(env != nullptr, "set NUSEG_BIN to the nuseg binary");
    return env;
#endif
}

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string last_line(const std::string& text) {
    std::istringstream in(text);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    return last;
}

bool file_exists(const std::string& path) {
    return std::ifstream(path).good();
}

/// Small scene written as PNG; returns the image path.
std::string write_scene_png(const TempDir& dir, const std::string& name,
                            synth::Scene* scene_out = nullptr) {
    synth::SceneSpec spec;
    spec.width = 256;
    spec.height = 256;
    spec.seed = 41;
    spec.nuclei = 12;
    spec.merged_pairs = 1;
    spec.fp_blobs = 3;
    synth::Scene scene = synth::generate_scene(spec);
    const std::string path = dir.file(name);
    nuseg::write_rgb(scene.image, path);
    if (scene_out) *scene_out = std::move(scene);
    return path;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("segment writes final and overlay maps") {
    TempDir dir("cli_seg");
    const std::string img = write_scene_png(dir, "scene.png");
    const std::string out = (dir.path / "out").string();
    const int code = run(cli_path() + " segment \"" + img + "\" --out \"" +
                         out + "\" 2>/dev/null");
    CHECK(code == 0);
    CHECK(file_exists(out + "/scene_final.png"));
    CHECK(file_exists(out + "/scene_overlay.png"));
    CHECK_FALSE(file_exists(out + "/scene_s1m12.png"));

    const nuseg::LabelMap final_map =
        nuseg::load_labelmap(out + "/scene_final.png");
    CHECK(final_map.width == 256);
    CHECK(final_map.height == 256);
    CHECK(testutil::count_instances(final_map) >= 8);
}

TEST_CASE("segment --stages adds per-stage artifacts") {
    TempDir dir("cli_stages");
    const std::string img = write_scene_png(dir, "scene.png");
    const std::string out = (dir.path / "out").string();
    const int code = run(cli_path() + " segment \"" + img +
                         "\" --stages --no-overlay --out \"" + out +
                         "\" 2>/dev/null");
    CHECK(code == 0);
    CHECK(file_exists(out + "/scene_final.png"));
    CHECK_FALSE(file_exists(out + "/scene_overlay.png"));
    CHECK(file_exists(out + "/scene_s1m12.png"));
    CHECK(file_exists(out + "/scene_s1m123.png"));
    const std::string fp_csv = read_all(out + "/scene_fp.csv");
    CHECK(fp_csv.rfind("tile,id,set,score,removed\n", 0) == 0);
    const std::string relabel_csv = read_all(out + "/scene_relabel.csv");
    CHECK(relabel_csv.rfind("tile,fg_to_bg,bg_to_fg,skipped\n", 0) == 0);
}

TEST_CASE("segment manifest with a bad row still processes the good one") {
    TempDir dir("cli_manifest");
    write_scene_png(dir, "scene.png");
    write_text(dir.file("images.csv"), "image\nmissing.png\nscene.png\n");
    const std::string out = (dir.path / "out").string();
    const int code = run(cli_path() + " segment --manifest \"" +
                         dir.file("images.csv") + "\" --out \"" + out +
                         "\" 2>/dev/null");
    CHECK(code == 1);
    CHECK(file_exists(out + "/scene_final.png"));
    CHECK_FALSE(file_exists(out + "/missing_final.png"));
}

TEST_CASE("segment without inputs is a usage error") {
    TempDir dir("cli_noinput");
    const int code = run(cli_path() + " segment --out \"" +
                         (dir.path / "out").string() + "\" 2>/dev/null");
    CHECK(code == 2);
}

TEST_CASE("eval of a prediction against itself scores 1") {
    TempDir dir("cli_eval");
    nuseg::LabelMap map(64, 64, 0);
    testutil::paint_disk(map, 20, 20, 6, 1);
    testutil::paint_disk(map, 44, 40, 8, 2);
    nuseg::write_labelmap(map, dir.file("pred.png"));
    write_text(dir.file("pred.csv"), "image\npred.png\n");
    write_text(dir.file("gt.csv"), "image\npred.png\n");
    const std::string out_txt = dir.file("eval.txt");
    const int code = run(cli_path() + " eval --pred \"" + dir.file("pred.csv") +
                         "\" --gt \"" + dir.file("gt.csv") + "\" > \"" +
                         out_txt + "\" 2>/dev/null");
    CHECK(code == 0);
    const std::string text = read_all(out_txt);
    CHECK(text.rfind("image,aji,dice\n", 0) == 0);
    CHECK(last_line(text) == "mean,1.000000,1.000000");
}

TEST_CASE("eval rejects an empty prediction manifest") {
    TempDir dir("cli_eval_empty");
    write_text(dir.file("pred.csv"), "image\n");
    write_text(dir.file("gt.csv"), "image\n");
    const int code = run(cli_path() + " eval --pred \"" + dir.file("pred.csv") +
                         "\" --gt \"" + dir.file("gt.csv") + "\" 2>/dev/null");
    CHECK(code == 2);
}

TEST_CASE("eval rejects mismatched manifest lengths") {
    TempDir dir("cli_eval_mismatch");
    nuseg::LabelMap map(16, 16, 0);
    testutil::paint_disk(map, 8, 8, 4, 1);
    nuseg::write_labelmap(map, dir.file("pred.png"));
    write_text(dir.file("pred.csv"), "image\npred.png\n");
    write_text(dir.file("gt.csv"), "image\npred.png\npred.png\n");
    const int code = run(cli_path() + " eval --pred \"" + dir.file("pred.csv") +
                         "\" --gt \"" + dir.file("gt.csv") + "\" 2>/dev/null");
    CHECK(code == 2);
}

TEST_CASE("ablate reports one mean per stage") {
    TempDir dir("cli_ablate");
    synth::Scene scene;
    write_scene_png(dir, "scene.png", &scene);
    nuseg::write_labelmap(scene.truth, dir.file("gt.png"));
    write_text(dir.file("images.csv"), "image\nscene.png\n");
    write_text(dir.file("gt.csv"), "image\ngt.png\n");
    const std::string out_txt = dir.file("ablate.txt");
    const int code = run(cli_path() + " ablate --images \"" +
                         dir.file("images.csv") + "\" --gt \"" +
                         dir.file("gt.csv") + "\" > \"" + out_txt +
                         "\" 2>/dev/null");
    CHECK(code == 0);
    const std::string text = read_all(out_txt);
    CHECK(text.rfind("stage1_modules_12,stage1_modules_123,stages_1_2\n", 0) ==
          0);
    // One data row of three comma-separated scores in [0, 1].
    const std::string row = last_line(text);
    std::istringstream in(row);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(in, cell, ',')) vals.push_back(std::stod(cell));
    REQUIRE(vals.size() == 3);
    for (double v : vals) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(vals[2] >= vals[0] - 1e-9);
}

TEST_CASE("ablate fails cleanly when ground truth is missing") {
    TempDir dir("cli_ablate_bad");
    write_scene_png(dir, "scene.png");
    write_text(dir.file("images.csv"), "image\nscene.png\n");
    write_text(dir.file("gt.csv"), "image\nno_such_gt.png\n");
    const int code = run(cli_path() + " ablate --images \"" +
                         dir.file("images.csv") + "\" --gt \"" +
                         dir.file("gt.csv") + "\" >/dev/null 2>&1");
    CHECK(code == 2);
}

TEST_CASE("invalid environment override aborts before processing") {
    TempDir dir("cli_env");
    const std::string img = write_scene_png(dir, "scene.png");
    const std::string out = (dir.path / "out").string();
    const int code = run("NUSEG_LAMBDA=1.5 " + cli_path() + " segment \"" +
                         img + "\" --out \"" + out + "\" 2>/dev/null");
    CHECK(code == 2);
    CHECK_FALSE(file_exists(out + "/scene_final.png"));
}

TEST_CASE("unknown flags are usage errors, help is not") {
    CHECK(run(cli_path() + " segment --bogus 2>/dev/null") == 2);
    CHECK(run(cli_path() + " --help >/dev/null 2>&1") == 0);
}

}  // TEST_SUITE
