#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "common.hpp"
#include "mstg/io.hpp"

using namespace mstg;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("mstg_io_" + std::to_string(::getpid()) + "_" +
               ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    void put(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

    template <class T>
    static void append(std::string& s, T v) {
        s.append(reinterpret_cast<const char*>(&v), sizeof v);
    }

    fs::path dir;
};

template <class Fn>
std::string error_of(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

using Fvecs = TempDir;

TEST_F(Fvecs, OneRecord) {
    std::string s;
    append(s, std::int32_t{2});
    append(s, 1.0f);
    append(s, 2.0f);
    put(dir / "a.fvecs", s);
    const auto v = read_fvecs(dir / "a.fvecs");
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v.dim(), 2u);
    EXPECT_EQ(v[0][0], 1.0f);
    EXPECT_EQ(v[0][1], 2.0f);
}

TEST_F(Fvecs, EmptyFile) {
    put(dir / "e.fvecs", "");
    EXPECT_EQ(read_fvecs(dir / "e.fvecs").size(), 0u);
}

TEST_F(Fvecs, RoundTripBitwise) {
    std::mt19937_64 rng(1);
    const auto vs = testutil::random_vectors(1000, 24, rng);
    write_fvecs(dir / "r.fvecs", vs);
    const auto back = read_fvecs(dir / "r.fvecs");
    ASSERT_EQ(back.size(), 1000u);
    ASSERT_EQ(back.dim(), 24u);
    for (std::size_t i = 0; i < 1000; ++i) {
        ASSERT_EQ(std::memcmp(back[i].data(), vs[i].data(), 24 * sizeof(float)), 0);
    }
    EXPECT_EQ(fs::file_size(dir / "r.fvecs"), 1000u * (4 + 24 * 4));
}

TEST_F(Fvecs, PositionedErrors) {
    std::string s;
    append(s, std::int32_t{2});
    append(s, 1.0f);
    append(s, 2.0f);
    std::string trunc = s;
    append(trunc, std::int32_t{2});
    append(trunc, 1.0f);
    put(dir / "t.fvecs", trunc);
    auto msg = error_of([&] { read_fvecs(dir / "t.fvecs"); });
    EXPECT_NE(msg.find("truncated"), std::string::npos);
    EXPECT_NE(msg.find("offset 12"), std::string::npos);

    std::string mixed = s;
    append(mixed, std::int32_t{3});
    for (int i = 0; i < 3; ++i) append(mixed, 0.0f);
    put(dir / "m.fvecs", mixed);
    msg = error_of([&] { read_fvecs(dir / "m.fvecs"); });
    EXPECT_NE(msg.find("offset 12"), std::string::npos);

    std::string zero;
    append(zero, std::int32_t{0});
    put(dir / "z.fvecs", zero);
    EXPECT_THROW(read_fvecs(dir / "z.fvecs"), parse_error);
    put(dir / "h.fvecs", "ab");
    EXPECT_THROW(read_fvecs(dir / "h.fvecs"), parse_error);
    EXPECT_THROW(read_fvecs(dir / "missing.fvecs"), io_error);
}

TEST_F(Fvecs, IvecsRoundTrip) {
    const std::vector<std::vector<std::int32_t>> rows{{1, 2, 3}, {-1, 7, 9}};
    write_ivecs(dir / "a.ivecs", rows);
    EXPECT_EQ(read_ivecs(dir / "a.ivecs"), rows);
}

using Attributes = TempDir;

TEST_F(Attributes, CsvRows) {
    put(dir / "a.csv", "id,lo,hi\n0,2.5,7.5\n3,5,5\n1,1,2\n2,0,10\n");
    const auto r = read_attributes(dir / "a.csv");
    ASSERT_EQ(r.size(), 4u);
    EXPECT_EQ(r[0].lo, 2.5);
    EXPECT_EQ(r[0].hi, 7.5);
    EXPECT_EQ(r[3].lo, 5);
    EXPECT_EQ(r[3].hi, 5);
    EXPECT_EQ(r[1].hi, 2);
}

TEST_F(Attributes, CsvErrors) {
    put(dir / "b.csv", "id,lo,hi\n0,1,2\n1,9,2\n");
    auto msg = error_of([&] { read_attributes(dir / "b.csv"); });
    EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
    EXPECT_THROW(read_attributes(dir / "b.csv"), invalid_input);

    put(dir / "c.csv", "id,lo,hi\n0,1,2\n1,x,3\n");
    msg = error_of([&] { read_attributes(dir / "c.csv"); });
    EXPECT_NE(msg.find(":3"), std::string::npos) << msg;

    put(dir / "d.csv", "id,lo,hi\n0,1,2\n0,1,3\n");
    EXPECT_THROW(read_attributes(dir / "d.csv"), parse_error);
    put(dir / "e.csv", "id,lo,hi\n0,1\n");
    EXPECT_THROW(read_attributes(dir / "e.csv"), parse_error);
}

TEST_F(Attributes, BinaryTwinColumn) {
    const std::vector<Interval> in{{0, 1}, {2.5, 7.5}, {5, 5}};
    std::string s;
    for (const auto& i : in) append(s, i.lo);
    for (const auto& i : in) append(s, i.hi);
    put(dir / "a.bin", s);
    const auto r = read_attributes(dir / "a.bin");
    ASSERT_EQ(r.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r[i].lo, in[i].lo);
        EXPECT_EQ(r[i].hi, in[i].hi);
    }
    put(dir / "odd.bin", s.substr(0, 20));
    EXPECT_THROW(read_attributes(dir / "odd.bin"), parse_error);
}

TEST_F(Attributes, WriteReadRoundTrip) {
    const auto in = gen_attributes(500, Distribution::normal, 0, 1e4, 3);
    std::vector<Interval> odd = in;
    odd[7] = {0.1, 1.0 / 3.0};
    write_attributes(dir / "w.csv", odd);
    const auto r = read_attributes(dir / "w.csv");
    ASSERT_EQ(r.size(), odd.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_EQ(r[i].lo, odd[i].lo);
        EXPECT_EQ(r[i].hi, odd[i].hi);
    }
}

TEST_F(Attributes, ScalarFile) {
    put(dir / "s.txt", "2.5\n4\n\n7\n");
    const auto r = read_scalar_attributes(dir / "s.txt");
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].lo, 2.5);
    EXPECT_EQ(r[0].hi, 2.5);
    EXPECT_EQ(r[1].lo, 4);
    EXPECT_EQ(r[2].hi, 7);
    put(dir / "bad.txt", "1\nx\n");
    const auto msg = error_of([&] { read_scalar_attributes(dir / "bad.txt"); });
    EXPECT_NE(msg.find(":2"), std::string::npos) << msg;
}

using Manifest = TempDir;

TEST_F(Manifest, LoadVerifiesChecksum) {
    auto ds = testutil::random_dataset(100, 4, 30, 4);
    write_fvecs(dir / "v.fvecs", ds->vectors);
    write_attributes(dir / "a.csv", ds->ranges);
    save_manifest(dir / "m.json", make_manifest("v.fvecs", "a.csv", dir));
    const auto loaded = load_dataset(dir / "m.json");
    ASSERT_EQ(loaded->size(), 100u);
    EXPECT_EQ(loaded->ranges[5].lo, ds->ranges[5].lo);

    auto tampered = ds->ranges;
    tampered[0].hi += 1;
    write_attributes(dir / "a.csv", tampered);
    EXPECT_THROW(load_dataset(dir / "m.json"), checksum_error);
}

TEST_F(Manifest, CountMismatch) {
    auto ds = testutil::random_dataset(10, 4, 30, 5);
    write_fvecs(dir / "v.fvecs", ds->vectors);
    std::vector<Interval> fewer(ds->ranges.begin(), ds->ranges.begin() + 9);
    write_attributes(dir / "a.csv", fewer);
    EXPECT_THROW(make_manifest("v.fvecs", "a.csv", dir), invalid_input);
}

class Archive : public TempDir {
protected:
    void SetUp() override {
        TempDir::SetUp();
        ds = testutil::random_dataset(1500, 8, 64, 6);
        const std::vector<Variant> vs{Variant::T, Variant::Tp, Variant::Tpp};
        set = IndexSet::build(ds, {8, 32}, vs);
    }
    std::shared_ptr<Dataset> ds;
    IndexSet set;
};

TEST_F(Archive, RoundTripIdentity) {
    save_index(dir / "i.mstg", set);
    const auto back = load_index(dir / "i.mstg");
    EXPECT_EQ(serialize_index(back), serialize_index(set));
    ASSERT_EQ(back.available(), set.available());
    for (Variant v : set.available()) {
        const auto& a = *set.get(v);
        const auto& b = *back.get(v);
        ASSERT_EQ(a.graphs().size(), b.graphs().size());
        for (Rank x = 1; x <= a.domain().size(); ++x) {
            const double v = a.domain().value(x);
            EXPECT_EQ(a.locate_version(v), b.locate_version(v));
        }
        for (std::size_t s = 0; s < a.graphs().size(); ++s) {
            const auto& ga = a.graph(static_cast<std::int32_t>(s));
            const auto& gb = b.graph(static_cast<std::int32_t>(s));
            for (Epoch x = 1; x <= a.domain().size(); ++x) EXPECT_EQ(ga.induced(x), gb.induced(x));
        }
    }
}

TEST_F(Archive, QueryResultsIdentical) {
    save_index(dir / "i.mstg", set);
    const auto back = load_index(dir / "i.mstg");
    const auto w = gen_queries(*ds, RRPredicate::intersects(), 0.1, 100, 7);
    QueryContext c1, c2;
    SearchParams sp;
    sp.L = 32;
    for (const auto& q : w.queries) {
        const auto a = rrann_search(set, q.pred, q.vector, q.range, sp, c1);
        const auto b = rrann_search(back, q.pred, q.vector, q.range, sp, c2);
        ASSERT_EQ(a.items.size(), b.items.size());
        for (std::size_t i = 0; i < a.items.size(); ++i) {
            EXPECT_EQ(a.items[i].id, b.items[i].id);
            EXPECT_EQ(std::memcmp(&a.items[i].dist, &b.items[i].dist, sizeof(float)), 0);
        }
        EXPECT_EQ(a.distance_computations, b.distance_computations);
    }
}

TEST_F(Archive, TruncatedIsChecksumError) {
    auto buf = serialize_index(set);
    for (std::size_t cut : {buf.size() - 1, buf.size() / 2, std::size_t{16}}) {
        std::vector<std::uint8_t> t(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(deserialize_index(t), checksum_error) << cut;
    }
    buf[buf.size() / 3] ^= 0x40;
    EXPECT_THROW(deserialize_index(buf), checksum_error);
}

TEST_F(Archive, WrongMagicOrVersion) {
    auto buf = serialize_index(set);
    auto bad = buf;
    bad[0] = 'X';
    EXPECT_THROW(deserialize_index(bad), format_error);
    bad = buf;
    bad[4] = 9;
    auto msg = error_of([&] { deserialize_index(bad); });
    EXPECT_NE(msg.find("version 9"), std::string::npos) << msg;
    put(dir / "junk", "hello world, not an index");
    EXPECT_THROW(load_index(dir / "junk"), format_error);
}

using Files = TempDir;

TEST_F(Files, GroundTruthRoundTrip) {
    const std::vector<std::vector<Neighbor>> gt{{{3, 0.5f}, {1, 0.75f}}, {}, {{9, 2.0f}}};
    save_ground_truth(dir / "gt", gt, 2);
    const auto ids = read_ivecs(fs::path(dir / "gt").concat(".ivecs"));
    EXPECT_EQ(ids[1], (std::vector<std::int32_t>{-1, -1}));
    const auto back = load_ground_truth(dir / "gt");
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].size(), 2u);
    EXPECT_EQ(back[0][1].id, 1u);
    EXPECT_EQ(back[0][1].dist, 0.75f);
    EXPECT_TRUE(back[1].empty());
    EXPECT_EQ(back[2].size(), 1u);
}

TEST_F(Files, WorkloadRoundTrip) {
    auto ds = testutil::random_dataset(400, 4, 40, 8);
    const auto w = gen_queries(*ds, RRPredicate({Atom::left_overlap, Atom::right_overlap}), 0.2, 20, 9);
    save_workload(dir / "w.json", w);
    const auto back = load_workload(dir / "w.json");
    ASSERT_EQ(back.queries.size(), w.queries.size());
    EXPECT_EQ(back.seed, 9u);
    for (std::size_t i = 0; i < w.queries.size(); ++i) {
        EXPECT_EQ(back.queries[i].vector, w.queries[i].vector);
        EXPECT_EQ(back.queries[i].range.lo, w.queries[i].range.lo);
        EXPECT_EQ(back.queries[i].range.hi, w.queries[i].range.hi);
        EXPECT_EQ(back.queries[i].pred, w.queries[i].pred);
    }
    put(dir / "bad.json", "{\"seed\": 1");
    EXPECT_THROW(load_workload(dir / "bad.json"), parse_error);
}

TEST(Report, LineAndTable) {
    BenchPoint p;
    p.method = "mstg";
    p.L = 64;
    p.k = 10;
    p.recall = 0.97;
    p.mean_distance_computations = 812.5;
    std::ostringstream os;
    write_report_line(os, p, {{"selectivity", 0.05}});
    const auto j = nlohmann::json::parse(os.str());
    EXPECT_EQ(j.at("method"), "mstg");
    EXPECT_EQ(j.at("L"), 64);
    EXPECT_DOUBLE_EQ(j.at("recall").get<double>(), 0.97);
    EXPECT_DOUBLE_EQ(j.at("selectivity").get<double>(), 0.05);
    const auto line = os.str();
    EXPECT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
    std::ostringstream t;
    write_summary_table(t, {p});
    EXPECT_NE(t.str().find("0.9700"), std::string::npos);
}
