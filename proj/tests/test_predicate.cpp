#include <gtest/gtest.h>

#include <random>

#include "common.hpp"
#include "mstg/predicate.hpp"

using namespace mstg;

namespace {

const std::vector<Variant> all{Variant::T, Variant::Tp, Variant::Tpp};

bool intersects(Interval a, Interval b) { return std::max(a.lo, b.lo) <= std::min(a.hi, b.hi); }

}  // namespace

TEST(EvalPredicate, Examples) {
    EXPECT_TRUE(eval_predicate({Atom::contained}, {1, 5}, {2, 4}));
    EXPECT_FALSE(eval_predicate({Atom::containing}, {1, 5}, {2, 4}));
    EXPECT_TRUE(eval_predicate({Atom::containing}, {2, 4}, {1, 5}));
    EXPECT_TRUE(eval_predicate({Atom::left_overlap}, {1, 3}, {2, 4}));
    EXPECT_TRUE(eval_predicate({Atom::right_overlap}, {3, 5}, {2, 4}));
    EXPECT_TRUE(eval_predicate({Atom::before}, {0, 1}, {2, 4}));
    EXPECT_FALSE(eval_predicate({Atom::before}, {0, 2}, {2, 4}));
    EXPECT_TRUE(eval_predicate({Atom::after}, {5, 6}, {2, 4}));
}

TEST(EvalPredicate, AllAtomsIsIntersection) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 100);
    const auto any = RRPredicate::intersects();
    for (int i = 0; i < 10000; ++i) {
        double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        Interval o{std::min(a, b), std::max(a, b)}, q{std::min(c, d), std::max(c, d)};
        ASSERT_EQ(eval_predicate(any, o, q), intersects(o, q));
    }
    // integer grid catches shared endpoints
    for (int a = 0; a < 6; ++a)
        for (int b = a; b < 6; ++b)
            for (int c = 0; c < 6; ++c)
                for (int d = c; d < 6; ++d)
                    ASSERT_EQ(eval_predicate(any, {double(a), double(b)}, {double(c), double(d)}),
                              intersects({double(a), double(b)}, {double(c), double(d)}));
}

TEST(Allen, PaperExamples) {
    EXPECT_EQ(map_allen_relation("d"), RRPredicate({Atom::contained}));
    EXPECT_EQ(map_allen_relation("="), RRPredicate({Atom::contained}));
    EXPECT_EQ(map_allen_relation("<"), RRPredicate({Atom::after}));
    EXPECT_EQ(map_allen_relation(">"), RRPredicate({Atom::before}));
    EXPECT_THROW(map_allen_relation("zz"), invalid_input);
}

TEST(Allen, MappingConsistency) {
    // X = query, Y = object, strict Allen definitions
    using Rel = bool (*)(double, double, double, double);
    const std::vector<std::pair<std::string, Rel>> rels{
        {"<", [](double xl, double xr, double yl, double yr) { return xr < yl && yl <= yr && xl <= xr; }},
        {">", [](double xl, double xr, double yl, double yr) { return yr < xl && yl <= yr && xl <= xr; }},
        {"m", [](double xl, double xr, double yl, double yr) { return xl < xr && xr == yl && yl < yr; }},
        {"mi", [](double xl, double xr, double yl, double yr) { return yl < yr && yr == xl && xl < xr; }},
        {"o", [](double xl, double xr, double yl, double yr) { return xl < yl && yl < xr && xr < yr; }},
        {"oi", [](double xl, double xr, double yl, double yr) { return yl < xl && xl < yr && yr < xr; }},
        {"s", [](double xl, double xr, double yl, double yr) { return xl == yl && xr < yr && xl <= xr; }},
        {"si", [](double xl, double xr, double yl, double yr) { return xl == yl && yr < xr && yl <= yr; }},
        {"d", [](double xl, double xr, double yl, double yr) { return yl < xl && xr < yr && xl <= xr; }},
        {"di", [](double xl, double xr, double yl, double yr) { return xl < yl && yr < xr && yl <= yr; }},
        {"f", [](double xl, double xr, double yl, double yr) { return xr == yr && yl < xl && xl <= xr; }},
        {"fi", [](double xl, double xr, double yl, double yr) { return xr == yr && xl < yl && yl <= yr; }},
        {"=", [](double xl, double xr, double yl, double yr) { return xl == yl && xr == yr && xl <= xr; }},
    };
    for (const auto& [name, rel] : rels) {
        const auto pred = map_allen_relation(name);
        int hits = 0;
        for (int xl = 0; xl < 7; ++xl)
            for (int xr = xl; xr < 7; ++xr)
                for (int yl = 0; yl < 7; ++yl)
                    for (int yr = yl; yr < 7; ++yr) {
                        if (!rel(xl, xr, yl, yr)) continue;
                        ++hits;
                        ASSERT_TRUE(eval_predicate(pred, {double(yl), double(yr)}, {double(xl), double(xr)}))
                            << name << " query [" << xl << "," << xr << "] object [" << yl << "," << yr << "]";
                    }
        EXPECT_GT(hits, 0) << name;
    }
}

TEST(ParsePredicate, Syntax) {
    EXPECT_EQ(parse_predicate("c1,c2,c3,c4"), RRPredicate::intersects());
    EXPECT_EQ(parse_predicate("intersects"), RRPredicate::intersects());
    EXPECT_EQ(parse_predicate("contained"), RRPredicate({Atom::contained}));
    EXPECT_EQ(parse_predicate("containing"), RRPredicate({Atom::containing}));
    EXPECT_EQ(parse_predicate("overlap-left, overlap-right"), RRPredicate({Atom::left_overlap, Atom::right_overlap}));
    EXPECT_EQ(parse_predicate("d,fi"), RRPredicate({Atom::contained, Atom::containing}));
    EXPECT_EQ(parse_predicate("before,after"), RRPredicate({Atom::before, Atom::after}));
    EXPECT_THROW(parse_predicate(""), invalid_input);
    EXPECT_THROW(parse_predicate("c1,,c2"), invalid_input);
    EXPECT_THROW(parse_predicate("c5"), invalid_input);
    EXPECT_EQ(parse_predicate(RRPredicate({Atom::left_overlap, Atom::after}).to_string()),
              RRPredicate({Atom::left_overlap, Atom::after}));
}

TEST(PlanQuery, ContainedExample) {
    AttrDomain dom({1, 2, 3, 4});
    auto p = plan_query({Atom::contained}, {2, 3}, dom, all);
    ASSERT_EQ(p.sub_plans.size(), 1u);
    EXPECT_EQ(p.sub_plans[0].variant, Variant::T);
    EXPECT_EQ(p.sub_plans[0].version, 2);
    EXPECT_EQ(p.sub_plans[0].tree_range, (RankRange{3, 4}));
}

TEST(PlanQuery, IntersectsUsesTAndTp) {
    AttrDomain dom({1, 2, 3, 4, 5, 6});
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> u(1, 6);
    for (int i = 0; i < 200; ++i) {
        double a = u(rng), b = u(rng);
        auto p = plan_query(RRPredicate::intersects(), {std::min(a, b), std::max(a, b)}, dom, all);
        ASSERT_EQ(p.sub_plans.size(), 2u);
        EXPECT_EQ(p.sub_plans[0].variant, Variant::T);
        EXPECT_EQ(p.sub_plans[1].variant, Variant::Tp);
    }
}

TEST(PlanQuery, VacuousIsEmpty) {
    AttrDomain dom({1, 2, 3, 4});
    EXPECT_TRUE(plan_query({Atom::contained}, {0.5, 3}, dom, all).empty());
    EXPECT_TRUE(plan_query({Atom::before}, {1, 3}, dom, all).empty());
    EXPECT_TRUE(plan_query({Atom::after}, {2, 4}, dom, all).empty());
}

TEST(PlanQuery, MissingVariantNamed) {
    AttrDomain dom({1, 2, 3, 4});
    const std::vector<Variant> only_t{Variant::T};
    try {
        plan_query({Atom::containing}, {1, 3}, dom, only_t);
        FAIL();
    } catch (const unsupported_predicate& e) {
        EXPECT_NE(std::string(e.what()).find("T''"), std::string::npos);
    }
    EXPECT_NO_THROW(plan_query({Atom::left_overlap, Atom::contained}, {1, 3}, dom, only_t));
}

TEST(PlanQuery, MixedDisjointRejected) {
    AttrDomain dom({1, 2, 3, 4});
    EXPECT_THROW(plan_query({Atom::before, Atom::contained}, {1, 3}, dom, all), unsupported_predicate);
    EXPECT_THROW(plan_query({Atom::contained}, {3, 1}, dom, all), invalid_input);
}

TEST(PlanQuery, RequiredVariants) {
    EXPECT_EQ(required_variants(RRPredicate::intersects()), (std::vector<Variant>{Variant::T, Variant::Tp}));
    EXPECT_EQ(required_variants({Atom::containing}), (std::vector<Variant>{Variant::Tpp}));
    EXPECT_EQ(required_variants({Atom::before, Atom::after}), (std::vector<Variant>{Variant::T, Variant::Tpp}));
    EXPECT_EQ(required_variants({Atom::left_overlap, Atom::right_overlap}), (std::vector<Variant>{Variant::T, Variant::Tp}));
}

TEST(PlanQuery, PartitionsFollowTable) {
    const std::map<int, std::vector<int>> want{{1, {1}},     {2, {2}},     {3, {3}},     {4, {4}},  {5, {1, 4}},
                                               {6, {6}},     {7, {3, 4}},  {8, {8}},     {9, {1, 8}}, {10, {2, 8}},
                                               {11, {3, 8}}, {12, {12}},   {13, {1, 12}}, {14, {6, 8}},
                                               {15, {3, 12}}, {16, {16}},  {32, {32}},   {48, {16, 32}}};
    for (const auto& [mask, groups] : want) {
        auto g = detail::plan_groups(RRPredicate(static_cast<std::uint8_t>(mask)));
        EXPECT_EQ(std::vector<int>(g.begin(), g.end()), groups) << mask;
    }
}

// Plans select exactly the predicate's qualifying set, on and off the grid.
TEST(PlanQuery, SoundAndComplete) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto ds = testutil::random_dataset(200, 1, 12, seed);
        const auto dom = AttrDomain::from_intervals(ds->ranges);
        std::vector<double> ends;
        for (double v : dom.values()) {
            ends.push_back(v);
            ends.push_back(v + 0.5);
        }
        ends.push_back(dom.values().front() - 0.5);
        for (int mask = 1; mask < 64; ++mask) {
            if ((mask & 15) && (mask & 48)) continue;
            const RRPredicate pred(static_cast<std::uint8_t>(mask));
            for (double lq : ends) {
                for (double rq : ends) {
                    if (lq > rq) continue;
                    auto plan = plan_query(pred, {lq, rq}, dom, all);
                    ASSERT_LE(plan.sub_plans.size(), 2u);
                    for (std::size_t i = 0; i < ds->size(); ++i) {
                        bool sel = false;
                        for (const auto& sp : plan.sub_plans) sel |= sp.selects(dom, ds->ranges[i]);
                        ASSERT_EQ(sel, eval_predicate(pred, ds->ranges[i], {lq, rq}))
                            << pred.to_string() << " q=[" << lq << "," << rq << "] obj " << i;
                    }
                }
            }
        }
    }
}
