#include <CLI11.hpp>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "nuseg/config.hpp"
#include "nuseg/imageio.hpp"
#include "nuseg/metrics.hpp"
#include "nuseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace nuseg;

namespace {

struct ManifestRow {
    std::string image;
    std::string annotation;  // optional second column
};

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

/// CSV with a header row; relative paths resolve against the manifest's
/// directory. No quoting support.
std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (base / p).string();
    };
    std::vector<ManifestRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        ManifestRow row;
        const size_t comma = line.find(',');
        row.image = resolve(trim(line.substr(0, comma)));
        if (comma != std::string::npos) {
            std::string rest = trim(line.substr(comma + 1));
            const size_t comma2 = rest.find(',');
            if (comma2 != std::string::npos) rest = trim(rest.substr(0, comma2));
            row.annotation = resolve(rest);
        }
        if (row.image.empty())
            throw std::runtime_error("manifest " + path + ": empty image path");
        rows.push_back(std::move(row));
    }
    return rows;
}

PipelineConfig build_config(const std::string& config_path) {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    apply_env_overrides(cfg);
    validate_config(cfg);
    return cfg;
}

LabelMap load_gt(const std::string& path, int width, int height) {
    if (fs::path(path).extension() == ".xml")
        return rasterize(parse_annotation_xml(path), width, height);
    return load_labelmap(path);
}

void write_fp_csv(const std::vector<FpDecision>& decisions,
                  const std::string& path) {
    std::ofstream out(path);
    out << "tile,id,set,score,removed\n";
    for (const FpDecision& d : decisions) {
        out << d.tile << ',' << d.id << ',' << (d.in_reference ? 'R' : 'Q')
            << ',';
        if (d.score) out << std::setprecision(9) << *d.score;
        out << ',' << (d.removed ? 1 : 0) << '\n';
    }
}

void write_relabel_csv(const RelabelReport& report, const std::string& path) {
    std::ofstream out(path);
    out << "tile,fg_to_bg,bg_to_fg,skipped\n";
    for (const TileReport& t : report.tiles)
        out << t.tile << ',' << t.fg_to_bg << ',' << t.bg_to_fg << ','
            << t.skip_reason << '\n';
}

/// Run fn(i) for i in [0, n) on `workers` threads. Exceptions surface as a
/// per-index message through on_error (serialized).
template <typename Fn, typename OnError>
void parallel_for(size_t n, int workers, Fn&& fn, OnError&& on_error) {
    std::atomic<size_t> next{0};
    std::mutex err_mutex;
    auto body = [&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                on_error(i, e.what());
            }
        }
    };
    const int count = std::max(1, workers);
    if (count == 1) {
        body();
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < count; ++t) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
}

int cmd_segment(const std::vector<std::string>& inputs,
                const std::string& manifest, const std::string& config_path,
                const std::string& outdir, bool stages, bool overlay,
                int workers) {
    PipelineConfig cfg;
    std::vector<std::string> images = inputs;
    try {
        cfg = build_config(config_path);
        if (!manifest.empty())
            for (const ManifestRow& row : read_manifest(manifest))
                images.push_back(row.image);
        if (images.empty()) throw std::runtime_error("no input images");
        fs::create_directories(outdir);
    } catch (const std::exception& e) {
        std::cerr << "nuseg segment: " << e.what() << '\n';
        return 2;
    }

    std::atomic<bool> any_failed{false};
    parallel_for(
        images.size(), workers,
        [&](size_t i) {
            const std::string& path = images[i];
            const RgbImage img = load_rgb(path);
            const StageOutputs out = run_pipeline(img, cfg);
            const std::string stem = fs::path(path).stem().string();
            const fs::path base = fs::path(outdir) / stem;
            write_labelmap(out.final_map, base.string() + "_final.png");
            if (overlay)
                write_rgb(render_overlay(img, out.final_map),
                          base.string() + "_overlay.png");
            if (stages) {
                write_labelmap(out.s1m12, base.string() + "_s1m12.png");
                write_labelmap(out.s1m123, base.string() + "_s1m123.png");
                write_fp_csv(out.fp_decisions, base.string() + "_fp.csv");
                write_relabel_csv(out.relabel_report,
                                  base.string() + "_relabel.csv");
            }
        },
        [&](size_t i, const std::string& what) {
            any_failed = true;
            std::cerr << "nuseg segment: " << images[i] << ": " << what
                      << '\n';
        });
    return any_failed ? 1 : 0;
}

int cmd_eval(const std::string& pred_manifest, const std::string& gt_manifest) {
    try {
        const auto pred_rows = read_manifest(pred_manifest);
        const auto gt_rows = read_manifest(gt_manifest);
        if (pred_rows.empty())
            throw std::runtime_error("empty prediction manifest");
        if (pred_rows.size() != gt_rows.size())
            throw std::runtime_error(
                "manifest row counts differ: " +
                std::to_string(pred_rows.size()) + " vs " +
                std::to_string(gt_rows.size()));
        std::cout << "image,aji,dice\n" << std::setprecision(6) << std::fixed;
        double aji_sum = 0.0, dice_sum = 0.0;
        for (size_t i = 0; i < pred_rows.size(); ++i) {
            const LabelMap pred = load_labelmap(pred_rows[i].image);
            const LabelMap gt =
                load_gt(gt_rows[i].image, pred.width, pred.height);
            const double a = aji(gt, pred).aji;
            const double d = dice(gt, pred);
            aji_sum += a;
            dice_sum += d;
            std::cout << pred_rows[i].image << ',' << a << ',' << d << '\n';
        }
        std::cout << "mean," << aji_sum / pred_rows.size() << ','
                  << dice_sum / pred_rows.size() << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "nuseg eval: " << e.what() << '\n';
        return 2;
    }
}

int cmd_ablate(const std::string& images_manifest,
               const std::string& gt_manifest, const std::string& config_path,
               int workers) {
    std::vector<ManifestRow> rows, gt_rows;
    PipelineConfig cfg;
    try {
        cfg = build_config(config_path);
        rows = read_manifest(images_manifest);
        gt_rows = read_manifest(gt_manifest);
        if (rows.empty()) throw std::runtime_error("empty image manifest");
        if (rows.size() != gt_rows.size())
            throw std::runtime_error(
                "manifest row counts differ: " + std::to_string(rows.size()) +
                " vs " + std::to_string(gt_rows.size()));
    } catch (const std::exception& e) {
        std::cerr << "nuseg ablate: " << e.what() << '\n';
        return 2;
    }

    std::vector<std::array<double, 3>> scores(rows.size());
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;
    parallel_for(
        rows.size(), workers,
        [&](size_t i) {
            const RgbImage img = load_rgb(rows[i].image);
            const StageOutputs out = run_pipeline(img, cfg);
            const LabelMap gt =
                load_gt(gt_rows[i].image, img.width, img.height);
            scores[i] = {aji(gt, out.s1m12).aji, aji(gt, out.s1m123).aji,
                         aji(gt, out.final_map).aji};
        },
        [&](size_t i, const std::string& what) {
            failed = true;
            std::lock_guard<std::mutex> lock(err_mutex);
            if (first_error.empty())
                first_error = rows[i].image + ": " + what;
        });
    if (failed) {
        std::cerr << "nuseg ablate: " << first_error << '\n';
        return 2;
    }
    std::array<double, 3> mean{};
    for (const auto& s : scores)
        for (int k = 0; k < 3; ++k) mean[k] += s[k];
    for (int k = 0; k < 3; ++k) mean[k] /= static_cast<double>(rows.size());
    std::cout << "stage1_modules_12,stage1_modules_123,stages_1_2\n"
              << std::setprecision(6) << std::fixed << mean[0] << ','
              << mean[1] << ',' << mean[2] << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised nuclei instance segmentation"};
    app.require_subcommand(1);

    auto* segment = app.add_subcommand(
        "segment", "Segment H&E images into labeled instance maps");
    std::vector<std::string> seg_inputs;
    std::string seg_manifest, seg_config, seg_out = ".";
    bool seg_stages = false, seg_overlay = true;
    int seg_workers = 1;
    segment->add_option("inputs", seg_inputs, "Input image paths");
    segment->add_option("--manifest", seg_manifest,
                        "CSV manifest with an image column");
    segment->add_option("--config", seg_config, "Config file (key = value)");
    segment->add_option("--out", seg_out, "Output directory");
    segment->add_flag("--stages", seg_stages,
                      "Also write per-stage label maps and reports");
    segment->add_flag("--overlay,!--no-overlay", seg_overlay,
                      "Write boundary overlay PNGs (default on)");
    segment->add_option("--workers", seg_workers, "Worker thread count")
        ->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand(
        "eval", "Score predicted label maps against ground truth");
    std::string eval_pred, eval_gt;
    eval->add_option("--pred", eval_pred, "Prediction manifest CSV")
        ->required();
    eval->add_option("--gt", eval_gt,
                     "Ground-truth manifest CSV (label PNG or Aperio XML)")
        ->required();

    auto* ablate = app.add_subcommand(
        "ablate", "Mean AJI after each pipeline stage, as CSV");
    std::string abl_images, abl_gt, abl_config;
    int abl_workers = 1;
    ablate->add_option("--images", abl_images, "Image manifest CSV")
        ->required();
    ablate->add_option("--gt", abl_gt, "Ground-truth manifest CSV")
        ->required();
    ablate->add_option("--config", abl_config, "Config file (key = value)");
    ablate->add_option("--workers", abl_workers, "Worker thread count")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit 0, usage errors 2
    }

    if (segment->parsed())
        return cmd_segment(seg_inputs, seg_manifest, seg_config, seg_out,
                           seg_stages, seg_overlay, seg_workers);
    if (eval->parsed()) return cmd_eval(eval_pred, eval_gt);
    return cmd_ablate(abl_images, abl_gt, abl_config, abl_workers);
}
