// Acceptance harness: exercises each shipped guarantee end to end and prints
// one verdict line per criterion. Exit code is the number of failures, so a
// clean run exits 0 even when the optional dataset check is skipped.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nuseg/adaptive_threshold.hpp"
#include "nuseg/fp_filter.hpp"
#include "nuseg/imageio.hpp"
#include "nuseg/instancemorph.hpp"
#include "nuseg/metrics.hpp"
#include "nuseg/pipeline.hpp"
#include "nuseg/selftrain.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void verdict(int idx, const std::string& name, int status,
             const std::string& detail) {
    static const char* tags[] = {"PASS", "FAIL", "SKIP"};
    std::cout << "criterion " << idx << " [" << tags[status] << "] " << name;
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << std::endl;
    if (status == 1) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(prec);
    out << v;
    return out.str();
}

std::string cli_path() {
#ifdef NUSEG_CLI_PATH
    return NUSEG_CLI_PATH;
#else
    const char* env = std::getenv("NUSEG_BIN");
    return env ? env : "";
#endif
}

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// 1. Mean AJI on the public MoNuSeg test splits, when the dataset is
// available locally. Expects NUSEG_MONUSEG_DIR with test1/ (14 images) and
// test2/ (6 images), each holding <stem>.tif + <stem>.xml pairs.
void criterion_dataset() {
    const char* root = std::getenv("NUSEG_MONUSEG_DIR");
    if (!root) {
        verdict(1, "reference dataset AJI", 2,
                "set NUSEG_MONUSEG_DIR to a directory with test1/ and test2/ "
                "tif+xml pairs to enable");
        return;
    }
    struct Split {
        const char* dir;
        double target;
    };
    const Split splits[] = {{"test1", 0.6387}, {"test2", 0.6548}};
    std::string detail;
    bool any_split = false, ok = true;
    for (const Split& split : splits) {
        const fs::path dir = fs::path(root) / split.dir;
        if (!fs::is_directory(dir)) continue;
        std::vector<fs::path> images;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string ext = entry.path().extension().string();
            if (ext == ".tif" || ext == ".tiff" || ext == ".png")
                images.push_back(entry.path());
        }
        std::sort(images.begin(), images.end());
        if (images.empty()) continue;
        any_split = true;
        double sum = 0.0, worst_seconds = 0.0;
        bool split_ok = true;
        for (const fs::path& img_path : images) {
            fs::path xml = img_path;
            xml.replace_extension(".xml");
            if (!fs::exists(xml)) {
                detail += img_path.filename().string() + " has no annotation; ";
                split_ok = false;
                break;
            }
            const auto t0 = Clock::now();
            const nuseg::RgbImage img = nuseg::load_rgb(img_path.string());
            const nuseg::StageOutputs out =
                nuseg::run_pipeline(img, nuseg::PipelineConfig{});
            worst_seconds = std::max(worst_seconds, seconds_since(t0));
            const nuseg::LabelMap gt = nuseg::rasterize(
                nuseg::parse_annotation_xml(xml.string()), img.width,
                img.height);
            sum += nuseg::aji(gt, out.final_map).aji;
        }
        if (!split_ok) {
            ok = false;
            continue;
        }
        const double mean = sum / static_cast<double>(images.size());
        detail += std::string(split.dir) + " mean AJI " + fmt(mean) +
                  " (target " + fmt(split.target) + " +/- 0.05, " +
                  std::to_string(images.size()) + " images, slowest " +
                  fmt(worst_seconds, 1) + " s); ";
        if (std::abs(mean - split.target) > 0.05) ok = false;
        if (worst_seconds >= 60.0) {
            detail += "over the 60 s/image budget; ";
            ok = false;
        }
    }
    if (!any_split) {
        verdict(1, "reference dataset AJI", 1,
                std::string(root) + " has no test1/ or test2/ images");
        return;
    }
    verdict(1, "reference dataset AJI", ok ? 0 : 1, detail);
}

// 2. Mean AJI must not decrease across the three reported stages on a
// 20-image synthetic suite with varied density, contrast and merge rate.
void criterion_ablation() {
    const auto t0 = Clock::now();
    testutil::TempDir dir("accept_ablate");
    std::ofstream images_csv(dir.file("images.csv")),
        gt_csv(dir.file("gt.csv"));
    images_csv << "image\n";
    gt_csv << "image\n";
    for (int i = 0; i < 20; ++i) {
        synth::SceneSpec spec;
        spec.seed = 100 + static_cast<uint32_t>(i);
        spec.nuclei = 30 + (i % 6) * 10;           // 30..80
        spec.merged_pairs = i % 4;                 // 0..3 touching pairs
        spec.contrast = 0.85 + 0.03 * (i % 5);     // 0.85..0.97
        spec.fp_blobs = 4 + i % 4;
        const synth::Scene scene = synth::generate_scene(spec);
        const std::string stem = "scene_" + std::to_string(i);
        nuseg::write_rgb(scene.image, dir.file(stem + ".png"));
        nuseg::write_labelmap(scene.truth, dir.file(stem + "_gt.png"));
        images_csv << stem << ".png\n";
        gt_csv << stem << "_gt.png\n";
    }
    images_csv.close();
    gt_csv.close();

    const std::string out_txt = dir.file("ablate.txt");
    const int code =
        run(cli_path() + " ablate --images \"" + dir.file("images.csv") +
            "\" --gt \"" + dir.file("gt.csv") + "\" --workers 4 > \"" +
            out_txt + "\"");
    if (code != 0) {
        verdict(2, "stagewise ablation", 1,
                "ablate exited with code " + std::to_string(code));
        return;
    }
    std::ifstream in(out_txt);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::array<double, 3> mean{};
    std::istringstream cells(row);
    std::string cell;
    for (double& v : mean) {
        if (!std::getline(cells, cell, ',')) {
            verdict(2, "stagewise ablation", 1, "malformed output row: " + row);
            return;
        }
        v = std::stod(cell);
    }
    const double elapsed = seconds_since(t0);
    const bool ordered = mean[0] <= mean[1] + 1e-9 && mean[1] <= mean[2] + 1e-9;
    const bool in_time = elapsed < 300.0;
    verdict(2, "stagewise ablation", ordered && in_time ? 0 : 1,
            fmt(mean[0]) + " -> " + fmt(mean[1]) + " -> " + fmt(mean[2]) +
                " over 20 scenes in " + fmt(elapsed, 1) + " s" +
                (ordered ? "" : "; order violated") +
                (in_time ? "" : "; over the 5 min budget"));
}

// 3. The correction always moves the threshold away from the taller peak:
// taller bright peak pulls it down, taller dark peak pushes it up, equal
// heights leave it untouched.
void criterion_sign_property() {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const double t1 = 0.05 + unit(rng) * 0.45;
        const double t2 = t1 + 0.08 + unit(rng) * (0.92 - t1);
        const double h1 = 0.05 + unit(rng) * 0.95;
        const double h2 = i % 10 == 0 ? h1 : 0.05 + unit(rng) * 0.95;
        nuseg::BimodalFit fit;
        fit.mode = nuseg::ThresholdMode::bimodal;
        fit.peak1.t = t1;
        fit.peak1.h = h1;
        fit.peak2.t = t2;
        fit.peak2.h = h2;
        const nuseg::BimodalFit out = nuseg::correct_threshold(fit, 0.3);
        bool ok = true;
        if (h2 > h1)
            ok = out.t_prime < out.t_o;
        else if (h1 > h2)
            ok = out.t_prime > out.t_o;
        else
            ok = out.t_prime == out.t_o;
        ok = ok && out.t_prime > t1 && out.t_prime < t2;
        if (!ok) ++bad;
    }
    verdict(3, "threshold correction sign property", bad == 0 ? 0 : 1,
            std::to_string(bad) + " of 1000 randomized histograms violated "
                                  "the direction rule");
}

// 4. Frozen numeric reference for the correction formula.
void criterion_reference_value() {
    nuseg::BimodalFit fit;
    fit.mode = nuseg::ThresholdMode::bimodal;
    fit.peak1.t = 0.235;
    fit.peak1.h = 0.9;
    fit.peak2.t = 0.706;
    fit.peak2.h = 0.5;
    const nuseg::BimodalFit out = nuseg::correct_threshold(fit, 0.3);
    const double expected = 0.648843949044586;
    const double err = std::abs(out.t_prime - expected);
    verdict(4, "threshold correction reference value", err <= 1e-6 ? 0 : 1,
            "got " + fmt(out.t_prime, 15) + ", expected " + fmt(expected, 15));
}

nuseg::LabelMap random_instances(int w, int h, int max_instances,
                                 uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> nd(0, max_instances);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    nuseg::LabelMap map(w, h, 0);
    const int n = nd(rng);
    for (int k = 1; k <= n; ++k) {
        if (unit(rng) < 0.5) {
            testutil::paint_disk(map, unit(rng) * w, unit(rng) * h,
                                 1.0 + unit(rng) * (w / 4.0),
                                 static_cast<uint32_t>(k));
        } else {
            const int x0 = static_cast<int>(unit(rng) * w);
            const int y0 = static_cast<int>(unit(rng) * h);
            const int x1 =
                std::min(w - 1, x0 + 1 + static_cast<int>(unit(rng) * w / 3));
            const int y1 =
                std::min(h - 1, y0 + 1 + static_cast<int>(unit(rng) * h / 3));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    map.at(x, y) = static_cast<uint32_t>(k);
        }
    }
    return map;
}

// 5. Production AJI agrees with the brute-force set-based oracle, plus three
// hand-derived fixed ratios.
void criterion_aji_oracle() {
    std::string detail;
    bool ok = true;
    int divergent = 0;
    for (uint32_t seed = 0; seed < 500; ++seed) {
        const int w = 8 + static_cast<int>(seed % 25);
        const int h = 8 + static_cast<int>((seed * 7) % 25);
        const nuseg::LabelMap gt = random_instances(w, h, 6, seed * 2 + 1);
        const nuseg::LabelMap pred = random_instances(w, h, 6, seed * 2 + 2);
        const nuseg::AjiBreakdown got = nuseg::aji(gt, pred);
        const oracle::AjiResult want = oracle::aji(gt, pred);
        if (got.intersection != want.intersection ||
            got.union_pixels + got.unmatched_pred_pixels != want.denominator ||
            std::abs(got.aji - want.aji) > 1e-12)
            ++divergent;
    }
    if (divergent) {
        ok = false;
        detail += std::to_string(divergent) + " of 500 random pairs diverged; ";
    }

    auto expect = [&](const nuseg::LabelMap& gt, const nuseg::LabelMap& pred,
                      double want, const char* label) {
        const double got = nuseg::aji(gt, pred).aji;
        if (std::abs(got - want) > 1e-12) {
            ok = false;
            detail += std::string(label) + " got " + fmt(got, 12) + "; ";
        }
    };
    const nuseg::LabelMap ident = random_instances(24, 24, 5, 9);
    expect(ident, ident, 1.0, "identity");

    nuseg::LabelMap sq_gt(8, 8, 0), sq_off(8, 8, 0);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            sq_gt.at(x + 2, y + 2) = 1;
            sq_off.at(x + 3, y + 3) = 1;  // 1 px overlap, union 7
        }
    expect(sq_gt, sq_off, 1.0 / 7.0, "offset squares");

    nuseg::LabelMap pred2(8, 8, 0);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) pred2.at(x + 2, y + 2) = 1;
    for (int x = 0; x < 3; ++x) pred2.at(x, 7) = 2;  // unclaimed 3-px bar
    expect(sq_gt, pred2, 4.0 / 7.0, "unclaimed prediction");

    verdict(5, "aji oracle equivalence", ok ? 0 : 1,
            ok ? "500 random pairs and 3 fixed ratios agree" : detail);
}

// Planted-blob fixture shared by the kernel criterion: three stained disks
// of distinct sizes, one washed-out blob, one small stained disk.
struct BlobFixture {
    nuseg::RgbImage rgb{200, 200};
    nuseg::LabelMap map{200, 200, 0};

    BlobFixture() {
        const std::array<int, 3> bg{232, 213, 225}, fg{95, 75, 140};
        for (int y = 0; y < 200; ++y)
            for (int x = 0; x < 200; ++x)
                rgb.set(x, y, static_cast<uint8_t>(bg[0]),
                        static_cast<uint8_t>(bg[1]),
                        static_cast<uint8_t>(bg[2]));
        auto paint = [&](double cx, double cy, double r, uint32_t id,
                         double mixed) {
            testutil::paint_disk(map, cx, cy, r, id);
            for (int y = 0; y < 200; ++y)
                for (int x = 0; x < 200; ++x) {
                    if (map.at(x, y) != id) continue;
                    for (int ch = 0; ch < 3; ++ch)
                        rgb.at(x, y, ch) = static_cast<uint8_t>(
                            bg[ch] + mixed * (fg[ch] - bg[ch]));
                }
        };
        paint(50, 50, 12, 1, 1.0);
        paint(140, 60, 13, 2, 1.0);
        paint(60, 140, 14, 3, 1.0);
        paint(160, 160, 5, 4, 0.45);  // washed distractor
        paint(100, 110, 6, 5, 1.0);
    }
};

std::set<uint32_t> removed_ids(const nuseg::FpResult& result) {
    std::set<uint32_t> ids;
    for (const nuseg::FpDecision& d : result.decisions)
        if (d.removed) ids.insert(d.id);
    return ids;
}

// 6. Similarity kernel identities and threshold monotonicity of removals.
void criterion_kernel() {
    std::string detail;
    bool ok = true;

    nuseg::InstanceFeatures a{0.3, 0.7, 0.2, 0.5};
    if (nuseg::similarity(a, a, 0.1) != 1.0) {
        ok = false;
        detail += "S(x,x) != 1; ";
    }
    nuseg::InstanceFeatures zero{0.0, 0.0, 0.0, 0.0};
    nuseg::InstanceFeatures dist{3.0, 1.0, 0.0, 0.0};  // squared distance 10
    const double s = nuseg::similarity(zero, dist, 0.1);
    if (std::abs(s - std::exp(-1.0)) > 1e-12) {
        ok = false;
        detail += "S at squared distance 10 got " + fmt(s, 15) + "; ";
    }

    const BlobFixture fixture;
    std::set<uint32_t> prev;
    bool washed_removed_at_default = false;
    for (double t_s : {0.0, 0.2, 0.4, 0.6, 0.8, 0.95}) {
        nuseg::FpParams params;
        params.t_s = t_s;
        const nuseg::FpResult result =
            nuseg::score_and_filter(fixture.map, fixture.rgb, params);
        const std::set<uint32_t> removed = removed_ids(result);
        if (!std::includes(removed.begin(), removed.end(), prev.begin(),
                           prev.end())) {
            ok = false;
            detail += "removals shrank when t_s rose to " + fmt(t_s, 2) + "; ";
        }
        if (t_s == 0.6) washed_removed_at_default = removed.count(4) == 1;
        prev = removed;
    }
    if (!washed_removed_at_default) {
        ok = false;
        detail += "washed blob survived the default threshold; ";
    }
    verdict(6, "similarity kernel and removal monotonicity", ok ? 0 : 1,
            ok ? "identities hold, removals grow with the threshold" : detail);
}

// 7. Relabeling sloppy pseudo-labels must raise pixel accuracy, and a flip
// threshold of 1 must change nothing.
void criterion_selftrain() {
    std::string detail;
    bool ok = true;
    double before_sum = 0.0, after_sum = 0.0;
    for (uint32_t seed : {61u, 62u, 63u}) {
        synth::SceneSpec spec;
        spec.width = 256;
        spec.height = 256;
        spec.seed = seed;
        spec.nuclei = 14;
        spec.merged_pairs = 0;
        spec.fp_blobs = 0;
        const synth::Scene scene = synth::generate_scene(spec);
        nuseg::Mask truth_mask(scene.truth.width, scene.truth.height, 0);
        for (std::size_t i = 0; i < scene.truth.data.size(); ++i)
            truth_mask.data[i] = scene.truth.data[i] != 0;
        const nuseg::LabelMap pseudo =
            nuseg::label_components(synth::dilate_chebyshev(truth_mask, 2));
        const nuseg::Stage2Result result =
            nuseg::stage2_pass(pseudo, scene.image, 200, 0.9, 50);
        before_sum += synth::binary_accuracy(scene.truth, pseudo);
        after_sum += synth::binary_accuracy(scene.truth, result.map);

        const nuseg::Stage2Result frozen =
            nuseg::stage2_pass(pseudo, scene.image, 200, 1.0, 50);
        if (frozen.map.data != pseudo.data) {
            ok = false;
            detail += "tau 1.0 modified seed " + std::to_string(seed) + "; ";
        }
    }
    if (!(after_sum > before_sum)) ok = false;
    verdict(7, "self-training improvement", ok ? 0 : 1,
            "mean pixel accuracy " + fmt(before_sum / 3.0) + " -> " +
                fmt(after_sum / 3.0) + (detail.empty() ? "" : "; " + detail));
}

// 8. A dumbbell of two radius-10 disks with centers 16 px apart must split
// into exactly two instances of roughly one disk each.
void criterion_dumbbell() {
    nuseg::LabelMap map(80, 60, 0);
    testutil::paint_disk(map, 32, 30, 10, 1);
    testutil::paint_disk(map, 48, 30, 10, 1);
    const nuseg::LabelMap split =
        nuseg::split_convexity(map, nuseg::SplitParams{});
    const std::vector<nuseg::Instance> instances =
        nuseg::collect_instances(split);
    const int64_t one_disk = testutil::disk_area(10.0);
    bool ok = instances.size() == 2;
    std::string detail = std::to_string(instances.size()) + " instances";
    for (const nuseg::Instance& ins : instances) {
        detail += ", area " + std::to_string(ins.area());
        if (std::abs(static_cast<double>(ins.area() - one_disk)) >
            0.15 * static_cast<double>(one_disk))
            ok = false;
    }
    detail += " (one disk = " + std::to_string(one_disk) + " +/- 15%)";
    verdict(8, "dumbbell split", ok ? 0 : 1, detail);
}

// 9. Byte-identical outputs across repeated runs and across worker counts.
void criterion_determinism() {
    testutil::TempDir dir("accept_determinism");
    std::ofstream manifest(dir.file("images.csv"));
    manifest << "image\n";
    std::vector<std::string> stems;
    for (uint32_t seed : {71u, 72u}) {
        synth::SceneSpec spec;
        spec.width = 256;
        spec.height = 256;
        spec.seed = seed;
        spec.nuclei = 16;
        spec.merged_pairs = 1;
        spec.fp_blobs = 3;
        const synth::Scene scene = synth::generate_scene(spec);
        const std::string stem = "scene_" + std::to_string(seed);
        nuseg::write_rgb(scene.image, dir.file(stem + ".png"));
        manifest << stem << ".png\n";
        stems.push_back(stem);
    }
    manifest.close();

    const std::array<std::pair<const char*, int>, 4> runs = {
        {{"run1", 1}, {"run2", 1}, {"run3", 1}, {"run4", 4}}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, workers] : runs) {
        const int code =
            run(cli_path() + " segment --manifest \"" + dir.file("images.csv") +
                "\" --no-overlay --out \"" + (dir.path / name).string() +
                "\" --workers " + std::to_string(workers) + " 2>/dev/null");
        if (code != 0) {
            verdict(9, "determinism across runs and workers", 1,
                    std::string(name) + " exited with code " +
                        std::to_string(code));
            return;
        }
    }
    for (const std::string& stem : stems) {
        const std::string reference =
            read_all((dir.path / "run1" / (stem + "_final.png")).string());
        if (reference.empty()) {
            ok = false;
            detail += stem + " missing from run1; ";
            continue;
        }
        for (const char* name : {"run2", "run3", "run4"}) {
            if (read_all((dir.path / name / (stem + "_final.png")).string()) !=
                reference) {
                ok = false;
                detail += stem + " differs in " + name + "; ";
            }
        }
    }
    verdict(9, "determinism across runs and workers", ok ? 0 : 1,
            ok ? "3 repeat runs and workers {1,4} byte-identical" : detail);
}

}  // namespace

int main() {
    if (cli_path().empty()) {
        std::cerr << "acceptance: set NUSEG_BIN to the nuseg binary\n";
        return 1;
    }
    criterion_dataset();
    criterion_ablation();
    criterion_sign_property();
    criterion_reference_value();
    criterion_aji_oracle();
    criterion_kernel();
    criterion_selftrain();
    criterion_dumbbell();
    criterion_determinism();
    if (g_failures)
        std::cout << g_failures << " criteria failed" << std::endl;
    return g_failures;
}
