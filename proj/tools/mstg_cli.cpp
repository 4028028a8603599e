#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mstg/mstg.hpp"

using namespace mstg;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::size_t> parse_grid(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& t : split(s)) out.push_back(std::stoul(t));
    if (out.empty()) throw invalid_input("empty L grid");
    return out;
}

std::vector<Variant> parse_variants(const std::string& s) {
    std::vector<Variant> out;
    for (const auto& t : split(s)) out.push_back(parse_variant(t));
    return out;
}

// every long option of every subcommand also reads MSTG_<NAME>
void attach_env(CLI::App& app) {
    for (CLI::Option* opt : app.get_options()) {
        const auto& names = opt->get_lnames();
        if (names.empty() || opt == app.get_help_ptr()) continue;
        std::string env = "MSTG_" + names.front();
        for (auto& c : env) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        opt->envname(env);
    }
    for (CLI::App* sub : app.get_subcommands({})) attach_env(*sub);
}

void print_items(const std::vector<Neighbor>& items, bool partial, std::size_t k) {
    for (const auto& n : items) std::cout << n.id << ' ' << n.dist << '\n';
    if (partial) std::cerr << "found " << items.size() << " < k = " << k << '\n';
}

struct Bench {
    std::string workload, gt, report;
    std::size_t k = 10;
    std::string grid = "16,32,64,128,256";
};

void report(const std::vector<BenchPoint>& points, const std::string& path, const Workload& w) {
    const nlohmann::json extra = {{"target_selectivity", w.target_selectivity}, {"vector_source", w.vector_source},
                                  {"rde_zero_policy", "exclude x/0 terms"}};
    if (!path.empty()) {
        std::ofstream os(path, std::ios::app);
        if (!os) throw io_error("cannot open '" + path + "' for writing");
        for (const auto& p : points) write_report_line(os, p, extra);
    }
    write_summary_table(std::cout, points);
    for (const auto& p : points) {
        if (p.rde_zero_excluded > 0) {
            std::cout << "note: " << p.method << " L=" << p.L << " excluded " << p.rde_zero_excluded
                      << " zero-distance RDE terms\n";
        }
    }
}

std::vector<std::vector<Neighbor>> load_truth(const std::string& stem, const Workload& w, const Dataset& ds,
                                              std::size_t k) {
    if (!stem.empty()) {
        auto gt = load_ground_truth(stem);
        if (gt.size() != w.queries.size()) throw invalid_input("ground truth does not match the workload");
        return gt;
    }
    return ground_truth(ds, w, k);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MSTG range-range filtered k-ANN index"};
    app.require_subcommand(1);

    // gen-vectors
    std::size_t gv_n = 10000, gv_dim = 16;
    std::uint64_t gv_seed = 1;
    std::string gv_out;
    auto* gen_vectors = app.add_subcommand("gen-vectors", "Gaussian random vectors as fvecs");
    gen_vectors->add_option("--n", gv_n, "vector count");
    gen_vectors->add_option("--dim", gv_dim, "dimensionality");
    gen_vectors->add_option("--seed", gv_seed);
    gen_vectors->add_option("--out", gv_out)->required();

    // gen-attrs
    std::size_t ga_n = 10000;
    std::string ga_dist = "uniform", ga_out;
    double ga_lo = 0, ga_hi = 1e4;
    std::uint64_t ga_seed = 1;
    auto* gen_attrs = app.add_subcommand("gen-attrs", "interval attributes as CSV (id,lo,hi)");
    gen_attrs->add_option("--n", ga_n);
    gen_attrs->add_option("--dist", ga_dist, "uniform | long-tail | normal | poisson | zipf");
    gen_attrs->add_option("--lo", ga_lo);
    gen_attrs->add_option("--hi", ga_hi);
    gen_attrs->add_option("--seed", ga_seed);
    gen_attrs->add_option("--out", ga_out)->required();

    // make-manifest
    std::string mm_vectors, mm_attrs, mm_out;
    auto* make_man = app.add_subcommand("make-manifest", "describe and checksum a dataset");
    make_man->add_option("--vectors", mm_vectors, "fvecs path, relative to the manifest")->required();
    make_man->add_option("--attrs", mm_attrs, "attribute path, relative to the manifest")->required();
    make_man->add_option("--out", mm_out)->required();

    // build
    std::string b_manifest, b_out, b_variants = "T,Tp";
    GraphParams b_params;
    auto* build = app.add_subcommand("build", "build index variants into an archive");
    build->add_option("--manifest", b_manifest)->required();
    build->add_option("--variants", b_variants, "comma list of T, Tp, Tpp");
    build->add_option("--m", b_params.m);
    build->add_option("--ef-con", b_params.ef_construction);
    build->add_option("--out", b_out)->required();

    // gen-queries
    std::string q_manifest, q_pred = "intersects", q_vectors, q_out;
    double q_sel = 0.05;
    std::size_t q_count = 1000;
    std::uint64_t q_seed = 1;
    auto* gen_q = app.add_subcommand("gen-queries", "selectivity-targeted workload as JSON");
    gen_q->add_option("--manifest", q_manifest)->required();
    gen_q->add_option("--predicate", q_pred);
    gen_q->add_option("--selectivity", q_sel);
    gen_q->add_option("--count", q_count);
    gen_q->add_option("--seed", q_seed);
    gen_q->add_option("--query-vectors", q_vectors, "fvecs file; default jittered data vectors");
    gen_q->add_option("--out", q_out)->required();

    // gt
    std::string gt_manifest, gt_workload, gt_out, gt_pred;
    std::size_t gt_k = 10;
    auto* gt = app.add_subcommand("gt", "exact ground truth for a workload");
    gt->add_option("--manifest", gt_manifest)->required();
    gt->add_option("--workload", gt_workload)->required();
    gt->add_option("--predicate", gt_pred, "override the workload's predicate");
    gt->add_option("--k", gt_k);
    gt->add_option("--out", gt_out, "output stem (.ivecs and .fvecs)")->required();

    // query
    std::string qy_index, qy_pred = "intersects", qy_vector, qy_vector_file;
    std::size_t qy_row = 0;
    double qy_lo = 0, qy_hi = 0;
    SearchParams qy_params;
    auto* query = app.add_subcommand("query", "answer one query");
    query->add_option("--index", qy_index)->required();
    query->add_option("--predicate", qy_pred);
    query->add_option("--vector", qy_vector, "comma-separated floats");
    query->add_option("--vector-file", qy_vector_file, "fvecs file");
    query->add_option("--row", qy_row, "row of --vector-file");
    query->add_option("--lo", qy_lo)->required();
    query->add_option("--hi", qy_hi)->required();
    query->add_option("--k", qy_params.k);
    query->add_option("--L", qy_params.L);

    // bench
    std::string bn_index;
    Bench bn;
    auto* bench = app.add_subcommand("bench", "recall / RDE / QPS over an L grid");
    bench->add_option("--index", bn_index)->required();
    bench->add_option("--workload", bn.workload)->required();
    bench->add_option("--gt", bn.gt, "ground truth stem; computed when absent");
    bench->add_option("--k", bn.k);
    bench->add_option("--L-grid", bn.grid);
    bench->add_option("--report", bn.report, "append JSON lines here");

    // baseline
    std::string bl_mode, bl_manifest;
    GraphParams bl_params;
    Bench bl;
    auto* baseline = app.add_subcommand("baseline", "pre- or post-filtering baseline");
    baseline->add_option("mode", bl_mode, "pre | post")->required()->check(CLI::IsMember({"pre", "post"}));
    baseline->add_option("--manifest", bl_manifest)->required();
    baseline->add_option("--workload", bl.workload)->required();
    baseline->add_option("--gt", bl.gt);
    baseline->add_option("--k", bl.k);
    baseline->add_option("--L-grid", bl.grid);
    baseline->add_option("--m", bl_params.m);
    baseline->add_option("--ef-con", bl_params.ef_construction);
    baseline->add_option("--report", bl.report);

    attach_env(app);
    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_vectors) {
            std::mt19937_64 rng(gv_seed);
            std::normal_distribution<float> g(0.0f, 1.0f);
            std::vector<float> flat(gv_n * gv_dim);
            for (auto& x : flat) x = g(rng);
            write_fvecs(gv_out, VectorSet(gv_dim, std::move(flat)));
        } else if (*gen_attrs) {
            write_attributes(ga_out, gen_attributes(ga_n, parse_distribution(ga_dist), ga_lo, ga_hi, ga_seed));
        } else if (*make_man) {
            const auto base = fs::path(mm_out).parent_path();
            save_manifest(mm_out, make_manifest(mm_vectors, mm_attrs, base.empty() ? "." : base));
        } else if (*build) {
            auto ds = load_dataset(b_manifest);
            const auto variants = parse_variants(b_variants);
            const auto t0 = std::chrono::steady_clock::now();
            auto set = IndexSet::build(ds, b_params, variants);
            const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            save_index(b_out, set);
            for (Variant v : set.available()) {
                const auto& s = set.get(v)->stats();
                std::cout << to_string(v) << ": " << set.get(v)->graphs().size() << " tree nodes, "
                          << s.graph_insertions << " graph insertions\n";
            }
            std::cout << "built in " << secs << " s\n";
        } else if (*gen_q) {
            auto ds = load_dataset(q_manifest);
            std::optional<VectorSet> qv;
            if (!q_vectors.empty()) qv = read_fvecs(q_vectors);
            const auto w = gen_queries(*ds, parse_predicate(q_pred), q_sel, q_count, q_seed, qv ? &*qv : nullptr);
            save_workload(q_out, w);
        } else if (*gt) {
            auto ds = load_dataset(gt_manifest);
            auto w = load_workload(gt_workload);
            if (!gt_pred.empty()) {
                for (auto& q : w.queries) q.pred = parse_predicate(gt_pred);
            }
            save_ground_truth(gt_out, ground_truth(*ds, w, gt_k), gt_k);
        } else if (*query) {
            const auto set = load_index(qy_index);
            std::vector<float> v;
            if (!qy_vector.empty()) {
                for (const auto& t : split(qy_vector)) v.push_back(std::stof(t));
            } else if (!qy_vector_file.empty()) {
                const auto vs = read_fvecs(qy_vector_file);
                if (qy_row >= vs.size()) throw invalid_input("--row out of range");
                v.assign(vs[qy_row].begin(), vs[qy_row].end());
            } else {
                throw invalid_input("query: give --vector or --vector-file");
            }
            QueryContext ctx;
            const auto r = rrann_search(set, parse_predicate(qy_pred), v, {qy_lo, qy_hi}, qy_params, ctx);
            print_items(r.items, r.partial, qy_params.k);
            std::cerr << r.distance_computations << " distance computations\n";
        } else if (*bench) {
            const auto set = load_index(bn_index);
            const auto w = load_workload(bn.workload);
            const auto truth = load_truth(bn.gt, w, set.dataset(), bn.k);
            QueryContext ctx;
            std::vector<BenchPoint> points;
            for (std::size_t L : parse_grid(bn.grid)) {
                SearchParams sp;
                sp.k = bn.k;
                sp.L = std::max(L, bn.k);
                points.push_back(measure("mstg", sp.L, bn.k, w, truth, [&](const Query& q) {
                    const auto r = rrann_search(set, q.pred, q.vector, q.range, sp, ctx);
                    return MethodOutput{r.items, r.distance_computations, r.partial};
                }));
            }
            report(points, bn.report, w);
        } else if (*baseline) {
            auto ds = load_dataset(bl_manifest);
            const auto w = load_workload(bl.workload);
            const auto truth = load_truth(bl.gt, w, *ds, bl.k);
            std::vector<BenchPoint> points;
            if (bl_mode == "pre") {
                points.push_back(measure("prefilter", 0, bl.k, w, truth, [&](const Query& q) {
                    const auto r = prefilter_baseline(*ds, q.pred, q.vector, q.range, bl.k);
                    return MethodOutput{r.items, r.distance_computations, r.partial};
                }));
            } else {
                const auto graph = build_full_graph(*ds, bl_params);
                QueryContext ctx;
                for (std::size_t L : parse_grid(bl.grid)) {
                    points.push_back(measure("postfilter", L, bl.k, w, truth, [&](const Query& q) {
                        const auto r = postfilter_baseline(graph, *ds, q.pred, q.vector, q.range, bl.k, L, ctx);
                        return MethodOutput{r.items, r.distance_computations, r.partial};
                    }));
                }
            }
            report(points, bl.report, w);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
