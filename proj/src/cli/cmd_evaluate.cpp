#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "cli_internal.hpp"
#include "gamkit/io/report.hpp"

namespace gamkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Item {
  std::string id;
  bool load_ok = false;
  std::string load_err;
  ImageTensor<double> image;
  std::optional<int> cls;
  std::optional<std::string> pair_id;
  std::optional<GroundTruthRegion> gt;
};

struct RunResult {
  std::vector<EvalRecord> records;            // one per unit, manifest order
  std::vector<std::optional<Matd>> grids;     // saliency grid per unit
};

bool rule_largest(const GroundTruthRegion& gt, const std::string& rule) {
  if (rule == "largest") return true;
  if (rule == "all") return false;
  return gt.mask ? false : true;  // auto: boxes follow the largest-component
                                  // convention, masks compare all pixels
}

// Threshold sweep with the per-record region rule applied.
double pick_threshold(const std::vector<const Matd*>& grids,
                      const std::vector<const GroundTruthRegion*>& gts,
                      const std::string& rule) {
  double best_theta = 0.01, best = -1.0;
  for (int i = 1; i <= 99; ++i) {
    const double theta = double(i) / 100.0;
    double acc = 0;
    for (size_t r = 0; r < grids.size(); ++r) {
      Mask m = binarize_grid(*grids[r], theta);
      if (rule_largest(*gts[r], rule)) m = largest_component(m);
      acc += iou_against(m, *gts[r]);
    }
    const double mean = acc / double(grids.size());
    if (mean > best) {
      best = mean;
      best_theta = theta;
    }
  }
  return best_theta;
}

// `units` selects which items get scored; for similarity runs that is the
// subset declaring pair_with, with the rest serving as reference images.
RunResult run_units(const nn::Modeld& model, const std::vector<Item>& items,
                    const std::vector<size_t>& units,
                    const std::map<std::string, size_t>& by_id, ScoreKind kind,
                    Method method, int n, int workers) {
  RunResult rr;
  rr.records.resize(units.size());
  rr.grids.resize(units.size());

  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t u = next.fetch_add(1); u < units.size();
         u = next.fetch_add(1)) {
      const Item& it = items[units[u]];
      EvalRecord rec;
      rec.id = it.id;
      if (!it.load_ok) {
        rec.error = it.load_err;
        rr.records[u] = rec;
        continue;
      }
      if (kind == ScoreKind::ClassLogit) {
        EvalItem<double> ei;
        ei.id = it.id;
        ei.image = it.image;
        ei.spec = ScoreSpec<double>::logit_class(*it.cls);
        ei.prob_class = it.cls;
        auto out = evaluate_item(model, ei, method, n);
        rr.records[u] = out.record;
        if (out.record.ok) rr.grids[u] = out.map.grid;
      } else {
        const auto at = by_id.find(*it.pair_id);
        if (at == by_id.end() || !items[at->second].load_ok) {
          rec.error = "pair_with target '" + *it.pair_id + "' unavailable";
          rr.records[u] = rec;
          continue;
        }
        auto out = evaluate_pair(model, it.id, it.image,
                                 items[at->second].image, kind, method, n);
        rr.records[u] = out.record;
        if (out.record.ok) rr.grids[u] = out.map_a.grid;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rr;
}

}  // namespace

int cmd_evaluate(const RunConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("evaluate needs --manifest");
  auto manifest = io::read_manifest(cfg.manifest);
  if (manifest.empty())
    throw EmptyInput("manifest '" + cfg.manifest + "' has no records");

  nn::Modeld model = load_model_for_run(cfg);
  const int max_n = usable_layers(model, cfg);
  for (int n : cfg.ns)
    if (n < 1 || n > max_n)
      throw ConfigError("n=" + std::to_string(n) + " outside [1," +
                        std::to_string(max_n) + "]");
  const ScoreKind kind = score_kind_from_name(cfg.score);
  const std::string task =
      kind == ScoreKind::ClassLogit ? "classification" : "similarity";
  const std::string mdir = fs::path(cfg.manifest).parent_path().string();

  // stage the items once; image problems become per-item failures
  std::vector<Item> items(manifest.size());
  std::map<std::string, size_t> by_id;
  for (size_t i = 0; i < manifest.size(); ++i) {
    const auto& rec = manifest[i];
    Item& it = items[i];
    it.id = rec.id;
    by_id[rec.id] = i;
    try {
      const std::string p = fs::path(rec.image_path).is_absolute()
                                ? rec.image_path
                                : join_path(mdir, rec.image_path);
      it.image = load_input(p, model, nullptr);
      if (kind == ScoreKind::ClassLogit) {
        if (!rec.label)
          throw InvalidRecord("record '" + rec.id + "' has no label");
        it.cls = resolve_class_index(model, *rec.label);
      }
      it.pair_id = rec.pair_with;
      GroundTruthRegion gt = region_from_record(rec, mdir);
      if (!gt.empty()) it.gt = std::move(gt);
      it.load_ok = true;
    } catch (const Error& e) {
      it.load_ok = false;
      it.load_err = e.what();
    }
  }

  // which manifest rows get scored
  std::vector<size_t> units;
  for (size_t i = 0; i < items.size(); ++i) {
    if (kind != ScoreKind::ClassLogit && !items[i].pair_id) continue;
    units.push_back(i);
  }
  if (units.empty())
    throw ConfigError("similarity evaluation needs records with pair_with");

  fs::create_directories(cfg.out_dir);
  std::vector<io::ReportRow> rows;
  json summary;
  summary["task"] = task;
  summary["manifest"] = cfg.manifest;
  summary["items"] = items.size();
  summary["scored_items"] = units.size();
  summary["threshold_mode"] = cfg.auto_threshold ? "auto" : "fixed";
  summary["results"] = json::array();
  summary["improvements"] = json::array();
  json record_dump = json::object();

  struct Agg {
    double adp = std::nan(""), pic = std::nan(""), iou = std::nan("");
  };
  std::map<std::pair<std::string, int>, Agg> aggs;
  std::set<std::string> failed_ids;
  size_t filtered_total = 0;

  for (const auto& mname : cfg.methods) {
    const Method method = method_from_name(mname);
    for (int n : cfg.ns) {
      RunResult rr =
          run_units(model, items, units, by_id, kind, method, n, cfg.workers);

      // localization
      std::vector<const Matd*> gt_grids;
      std::vector<const GroundTruthRegion*> gt_regions;
      std::vector<size_t> gt_index;
      for (size_t u = 0; u < units.size(); ++u)
        if (rr.records[u].ok && rr.grids[u] && items[units[u]].gt) {
          gt_grids.push_back(&*rr.grids[u]);
          gt_regions.push_back(&*items[units[u]].gt);
          gt_index.push_back(u);
        }
      double theta = cfg.threshold;
      if (cfg.auto_threshold && !gt_grids.empty())
        theta = pick_threshold(gt_grids, gt_regions, cfg.region_rule);
      std::vector<double> ious;
      for (size_t k = 0; k < gt_grids.size(); ++k) {
        Mask m = binarize_grid(*gt_grids[k], theta);
        if (rule_largest(*gt_regions[k], cfg.region_rule))
          m = largest_component(m);
        const double v = iou_against(m, *gt_regions[k]);
        rr.records[gt_index[k]].iou = v;
        ious.push_back(v);
      }

      // faithfulness aggregates over valid, unfiltered records
      std::vector<std::pair<double, double>> pairs;
      size_t filtered = 0, failures = 0;
      for (const auto& rec : rr.records) {
        if (!rec.ok) {
          ++failures;
          failed_ids.insert(rec.id);
          continue;
        }
        if (rec.filtered) {
          ++filtered;
          continue;
        }
        pairs.push_back({rec.y, rec.o});
      }
      filtered_total += filtered;

      Agg agg;
      if (!pairs.empty()) {
        agg.adp = adp(pairs);
        agg.pic = pic(pairs);
        rows.push_back({task, mname, n, "adp", agg.adp});
        rows.push_back({task, mname, n, "pic", agg.pic});
      }
      json res;
      res["method"] = mname;
      res["n"] = n;
      res["valid_records"] = pairs.size();
      res["filtered_nonpositive"] = filtered;
      res["failures"] = failures;
      if (!pairs.empty()) {
        res["adp"] = agg.adp;
        res["pic"] = agg.pic;
      }
      if (!ious.empty()) {
        double mean = 0;
        for (double v : ious) mean += v;
        mean = mean / double(ious.size()) * 100.0;
        agg.iou = mean;
        rows.push_back({"localization", mname, n, "iou_pct", mean});
        res["iou_pct"] = mean;
        res["threshold"] = theta;
        res["gt_records"] = ious.size();

        if (cfg.small_percentile > 0) {
          std::vector<double> areas;
          for (const auto* gt : gt_regions) areas.push_back(region_area(*gt));
          const auto keep = small_object_subset(areas, cfg.small_percentile);
          if (!keep.empty()) {
            double small = 0;
            for (size_t k : keep) small += ious[k];
            small = small / double(keep.size()) * 100.0;
            rows.push_back({"localization", mname, n, "iou_small_pct", small});
            res["iou_small_pct"] = small;
            res["small_subset"] = keep.size();
          }
        }
      }
      aggs[{mname, n}] = agg;
      summary["results"].push_back(res);

      json recj = json::array();
      for (const auto& rec : rr.records) {
        json r;
        r["id"] = rec.id;
        r["ok"] = rec.ok;
        if (!rec.ok) {
          r["error"] = rec.error;
        } else {
          r["y"] = rec.y;
          r["o"] = rec.o;
          r["filtered"] = rec.filtered;
          if (!rec.filtered) {
            r["drop"] = rec.drop;
            r["increased"] = rec.increased;
          }
          if (rec.iou) r["iou"] = *rec.iou;
        }
        recj.push_back(r);
      }
      record_dump[mname + "-n" + std::to_string(n)] = recj;
    }
  }

  // relative improvement of n=2 over n=1, per method and metric
  for (const auto& mname : cfg.methods) {
    const auto a1 = aggs.find({mname, 1});
    const auto a2 = aggs.find({mname, 2});
    if (a1 == aggs.end() || a2 == aggs.end()) continue;
    json imp;
    imp["method"] = mname;
    imp["from_n"] = 1;
    imp["to_n"] = 2;
    auto put = [&](const std::string& row_task, const char* metric, double m1,
                   double m2, bool lower) {
      if (std::isnan(m1) || std::isnan(m2) || m1 == 0) return;
      const double v = improvement(m1, m2, lower) * 100.0;
      rows.push_back(
          {row_task, mname, 2, std::string("impr_") + metric + "_pct", v});
      imp[std::string("impr_") + metric + "_pct"] = v;
    };
    put(task, "adp", a1->second.adp, a2->second.adp, /*lower=*/true);
    put(task, "pic", a1->second.pic, a2->second.pic, /*lower=*/false);
    put("localization", "iou", a1->second.iou, a2->second.iou,
        /*lower=*/false);
    if (imp.size() > 3) summary["improvements"].push_back(imp);
  }

  summary["failures"] = failed_ids.size();
  summary["filtered_nonpositive"] = filtered_total;
  summary["records"] = record_dump;

  io::write_report_csv(join_path(cfg.out_dir, "report.csv"), rows);
  std::ofstream os(join_path(cfg.out_dir, "summary.json"));
  if (!os) throw IOError("cannot write summary.json");
  os << summary.dump(2) << "\n";

  if (!failed_ids.empty()) {
    std::fprintf(stderr, "%zu item(s) failed; see summary.json\n",
                 failed_ids.size());
    return kExitPartial;
  }
  return kExitOk;
}

}  // namespace gamkit::cli
