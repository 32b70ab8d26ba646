#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hedgeval.hpp"

namespace hv = hedgeval;

namespace {

std::vector<double> parse_range(const std::string& text) {
  // "a:b:step" or "a,b,c"
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::istringstream is(text);
    double a = 0, b = 0, step = 0;
    char c1 = 0, c2 = 0;
    if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0) || b < a) {
      throw hv::Error(hv::ErrorKind::kConfig, "bad threshold range '" + text + "'");
    }
    return hv::threshold_range(a, b, step);
  }
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw hv::Error(hv::ErrorKind::kConfig, "bad threshold list '" + text + "'");
    }
  }
  if (out.empty()) throw hv::Error(hv::ErrorKind::kConfig, "empty threshold list");
  return out;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw hv::Error(hv::ErrorKind::kLoad, "cannot open '" + path + "' for writing");
  return file;
}

struct EvalArgs {
  std::string gt, dt, out;
  std::vector<std::string> metrics;
  std::optional<std::size_t> threads;
  std::uint64_t seed = 0;
  bool verify = false;
  bool no_timestamp = false;
  double min_score = 0.0;
  double f1_iou = 0.5, lrp_iou = 0.5, ne_iou = 0.5, curve_iou = 0.75;
  std::size_t max_dets = 100;
  std::string ap_ious = "0.5:0.95:0.05";
  std::string dc_ious = "0.5:0.95:0.05";
  std::string dc_confidences = "0.1:0.9:0.1";
};

int run_eval(const EvalArgs& a) {
  hv::EvalConfig cfg;
  if (!a.metrics.empty()) {
    cfg.metrics.clear();
    for (const auto& m : a.metrics) cfg.metrics.insert(hv::parse_metric(m));
  }
  cfg.ap_ious = parse_range(a.ap_ious);
  cfg.dc.ious = parse_range(a.dc_ious);
  cfg.dc.confidences = parse_range(a.dc_confidences);
  cfg.max_dets = a.max_dets;
  cfg.min_score = a.min_score;
  cfg.f1_iou = a.f1_iou;
  cfg.lrp_iou = a.lrp_iou;
  cfg.ne_iou = a.ne_iou;
  cfg.curve_iou = a.curve_iou;
  cfg.seed = a.seed;
  cfg.verify = a.verify;
  cfg.validate();

  const auto ds = hv::load_ground_truth(a.gt);
  const auto dets = hv::load_detections(a.dt, ds);
  const auto report = hv::evaluate(ds, dets, cfg, hv::resolve_threads(a.threads));
  hv::print_report_table(report, std::cout);
  if (!a.out.empty()) hv::write_report(report, a.out, !a.no_timestamp);
  return 0;
}

struct NmsArgs {
  std::string gt, dt, out;
  std::string method = "semantic";
  double iou_thr = 0.5;
  std::optional<double> score_floor;
  double occupancy_thr = 0.5;
  std::string semantic = "derive-from-gt";
  double dt_floor = 0.5;
  std::string decay = "gaussian";
  double sigma = 2.0;
  bool original_scores = false;
  std::optional<std::size_t> threads;
};

int run_nms(const NmsArgs& a) {
  hv::NmsConfig cfg;
  cfg.method = hv::parse_nms_method(a.method);
  cfg.iou_thr = a.iou_thr;
  cfg.score_floor = a.score_floor;
  cfg.occupancy_thr = a.occupancy_thr;
  cfg.decay = hv::parse_decay(a.decay);
  cfg.sigma = a.sigma;
  cfg.averaged_scores = !a.original_scores;
  cfg.validate();

  const auto ds = hv::load_ground_truth(a.gt);
  const auto dets = hv::load_detections(a.dt, ds);
  std::vector<hv::SemanticMaskSet> semantic;
  if (cfg.method == hv::NmsMethod::kSemantic) {
    semantic = hv::load_semantic_masks(hv::SemanticSpec::parse(a.semantic, a.dt_floor), ds, &dets);
  }
  const auto out = hv::run_nms(dets, cfg, semantic, hv::resolve_threads(a.threads));
  hv::write_detections(out, a.out);
  std::cout << "nms " << hv::to_string(cfg.method) << ": " << dets.size() << " -> " << out.size()
            << " detections\n";
  return 0;
}

struct SynthArgs {
  std::string out;
  hv::SynthConfig cfg;
  bool emit_detections = false;
  hv::HedgingConfig hedge;
};

int run_synth(SynthArgs a) {
  a.hedge.seed = a.cfg.seed;
  const auto data = hv::generate(a.cfg);
  hv::write_synth(data, a.cfg, a.out);
  std::cout << "synth: " << data.dataset.image_count() << " images, "
            << data.dataset.ground_truth_count() << " parts -> " << a.out << "\n";
  if (a.emit_detections) {
    const auto dets = hv::perfect_detector(data.dataset, a.hedge);
    hv::write_detections(dets, std::filesystem::path(a.out) / "detections.json");
    std::cout << "synth: " << dets.size() << " detections\n";
  }
  return 0;
}

struct PrArgs {
  std::string gt, dt, out, ratio_out;
  std::optional<std::int64_t> category;
  double iou_thr = 0.5;
};

int run_prcurve(const PrArgs& a) {
  const auto ds = hv::load_ground_truth(a.gt);
  const auto dets = hv::load_detections(a.dt, ds);
  if (ds.categories().empty()) throw hv::Error(hv::ErrorKind::kLoad, "ground truth declares no categories");
  const hv::CategoryId cat = a.category ? hv::CategoryId{*a.category} : ds.categories().front().id;
  if (!ds.has_category(cat)) {
    throw hv::Error(hv::ErrorKind::kConfig, "unknown category id " + std::to_string(cat.value));
  }
  const auto curve = hv::category_pr_curve(ds, dets, cat, a.iou_thr);
  std::ofstream file;
  auto& os = open_output(a.out, file);
  os << std::setprecision(17) << "rank,confidence,is_tp,precision,recall\n";
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    const auto& p = curve.points[k];
    os << k + 1 << ',' << p.confidence << ',' << (p.is_tp ? 1 : 0) << ',' << p.precision << ','
       << p.recall << '\n';
  }
  if (!a.ratio_out.empty()) {
    hv::EvalConfig defaults;
    const auto ratio = hv::fp_tp_ratio_curve(curve, defaults.recall_bins);
    std::ofstream rf;
    auto& ros = open_output(a.ratio_out, rf);
    ros << std::setprecision(17) << "recall,fp_tp_ratio\n";
    for (std::size_t k = 0; k < ratio.size(); ++k) {
      ros << defaults.recall_bins[k] << ',';
      if (ratio[k]) ros << *ratio[k];
      ros << '\n';
    }
  }
  return 0;
}

struct BenchArgs {
  hv::BenchConfig cfg;
  std::string sizes = "100,400,1600";
  std::string out;
};

int run_bench(BenchArgs a) {
  a.cfg.sizes.clear();
  for (double v : parse_range(a.sizes)) {
    if (!(v >= 1.0)) throw hv::Error(hv::ErrorKind::kConfig, "bench sizes must be positive");
    a.cfg.sizes.push_back(static_cast<std::size_t>(v));
  }
  const auto rows = hv::bench_nms(a.cfg);
  std::ofstream file;
  hv::write_bench_csv(rows, open_output(a.out, file));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hedgeval: instance segmentation evaluation with hedging-aware metrics"};
  app.set_version_flag("--version", std::string(hv::kVersion));
  app.require_subcommand(1);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate detections against ground truth");
  eval->add_option("--gt", ev.gt, "COCO annotation JSON")->required();
  eval->add_option("--dt", ev.dt, "COCO results JSON")->required();
  eval->add_option("--out", ev.out, "Report JSON path");
  eval->add_option("--metrics", ev.metrics, "ap,map,f1,dc,ne,lrp,fp-tp-curve (default: all)")->delimiter(',');
  eval->add_option("--threads", ev.threads, "Worker threads (fallback: HEDGEVAL_THREADS)");
  eval->add_option("--seed", ev.seed, "Seed for the verification sample");
  eval->add_flag("--verify", ev.verify, "Re-check a 1% image sample against brute-force oracles");
  eval->add_flag("--no-timestamp", ev.no_timestamp, "Omit the timestamp from the report");
  eval->add_option("--min-score", ev.min_score, "Score cutoff for F1 and fixed-cutoff LRP");
  eval->add_option("--ap-ious", ev.ap_ious, "AP IoU thresholds, a:b:step or list");
  eval->add_option("--max-dets", ev.max_dets, "Detections per image and category counted by AP");
  eval->add_option("--f1-iou", ev.f1_iou);
  eval->add_option("--lrp-iou", ev.lrp_iou);
  eval->add_option("--ne-iou", ev.ne_iou);
  eval->add_option("--curve-iou", ev.curve_iou, "IoU threshold of the FP/TP ratio curve");
  eval->add_option("--dc-ious", ev.dc_ious, "DC IoU grid, a:b:step or list");
  eval->add_option("--dc-confidences", ev.dc_confidences, "DC confidence grid, a:b:step or list");

  NmsArgs nm;
  auto* nms = app.add_subcommand("nms", "Suppress duplicate detections");
  nms->add_option("--gt", nm.gt, "COCO annotation JSON (image list and categories)")->required();
  nms->add_option("--dt", nm.dt, "COCO results JSON")->required();
  nms->add_option("--out", nm.out, "Output results JSON")->required();
  nms->add_option("--method", nm.method, "mask | matrix | soft | semantic");
  nms->add_option("--iou-thr", nm.iou_thr);
  nms->add_option("--score-floor", nm.score_floor, "Drop outputs below this score");
  nms->add_option("--occupancy-thr", nm.occupancy_thr, "Semantic NMS keep threshold");
  nms->add_option("--semantic", nm.semantic, "<dir> | derive-from-gt | derive-from-dt");
  nms->add_option("--dt-floor", nm.dt_floor, "Score floor for derive-from-dt");
  nms->add_option("--decay", nm.decay, "gaussian | linear");
  nms->add_option("--sigma", nm.sigma);
  nms->add_flag("--original-scores", nm.original_scores, "Semantic NMS emits input scores");
  nms->add_option("--threads", nm.threads);

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic part-counting dataset");
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->add_option("--n-images", sy.cfg.n_images);
  synth->add_option("--parts", sy.cfg.parts_per_image, "Parts per image");
  synth->add_option("--height", sy.cfg.height);
  synth->add_option("--width", sy.cfg.width);
  synth->add_option("--sigma-frac", sy.cfg.sigma_frac, "Placement spread relative to image size");
  synth->add_option("--decoys", sy.cfg.decoy_categories, "Extra categories with no instances");
  synth->add_option("--seed", sy.cfg.seed);
  synth->add_flag("--emit-detections", sy.emit_detections, "Also write perfect detections");
  synth->add_option("--hedge-k", sy.hedge.spatial_copies, "Jittered duplicates per part");
  synth->add_option("--hedge-step", sy.hedge.confidence_step, "Confidence step between duplicates");
  synth->add_option("--jitter", sy.hedge.jitter_px, "Duplicate offset in pixels");
  synth->add_option("--category-noise", sy.hedge.category_noise, "Probability of a wrong-label copy");

  PrArgs pr;
  auto* prc = app.add_subcommand("prcurve", "Write a precision/recall curve as CSV");
  prc->add_option("--gt", pr.gt)->required();
  prc->add_option("--dt", pr.dt)->required();
  prc->add_option("--out", pr.out, "CSV path (default: stdout)");
  prc->add_option("--category", pr.category, "Category id (default: first)");
  prc->add_option("--iou-thr", pr.iou_thr);
  prc->add_option("--ratio-out", pr.ratio_out, "FP/TP ratio curve CSV");

  BenchArgs be;
  auto* bench = app.add_subcommand("bench-nms", "Time mask NMS against semantic NMS");
  bench->add_option("--sizes", be.sizes, "Detection counts, comma separated");
  bench->add_option("--dup", be.cfg.duplication, "Copies per object");
  bench->add_option("--seed", be.cfg.seed);
  bench->add_option("--repeats", be.cfg.repeats, "Runs per measurement (median reported)");
  bench->add_option("--image-size", be.cfg.image_size);
  bench->add_option("--out", be.out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*eval) return run_eval(ev);
    if (*nms) return run_nms(nm);
    if (*synth) return run_synth(sy);
    if (*prc) return run_prcurve(pr);
    if (*bench) return run_bench(be);
  } catch (const std::exception& e) {
    std::cerr << "hedgeval: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
