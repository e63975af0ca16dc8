#include "aimc/io_formats.hpp"
#include "aimc/workloads.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace aimc;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
  protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("aimc_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

double round9(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    double out = 0.0;
    std::from_chars(buf, r.ptr, out);
    return out;
}

std::string header()
{
    std::string h;
    for (const auto& n : event_column_names()) {
        h += (h.empty() ? "" : ",") + n;
    }
    return h;
}

std::string row(std::size_t cells, const std::string& value = "1")
{
    std::string r;
    for (std::size_t i = 0; i < cells; ++i) {
        r += (i ? "," : "") + value;
    }
    return r;
}

}  // namespace

TEST(Crc32, KnownVector)
{
    const std::string s = "123456789";
    EXPECT_EQ(crc32_of({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}), 0xCBF43926u);
    EXPECT_EQ(crc32_of({}), 0u);
}

using Weights = TempDir;

TEST_F(Weights, RbmRoundTripBitExact)
{
    for (auto prec : {ValuePrecision::f64, ValuePrecision::f32}) {
        auto p = RbmParams::random_uniform(16, 2, 0.3, 5);
        if (prec == ValuePrecision::f32) {
            p.weights = p.weights.cast<float>().cast<double>();
            p.bias = p.bias.cast<float>().cast<double>();
        }
        const auto m = save_weights(p, dir / "rbm.json", prec);
        const auto q = std::get<RbmParams>(load_weights(m));
        EXPECT_EQ(q.alpha, 2u);
        EXPECT_EQ(q.n_spins, 16u);
        EXPECT_TRUE(q.weights == p.weights);
        EXPECT_TRUE(q.bias == p.bias);
    }
}

TEST_F(Weights, ZeroRoundTrip)
{
    const auto p = RbmParams::zeros(4, 1);
    const auto q = std::get<RbmParams>(load_weights(save_weights(p, dir / "z.json")));
    EXPECT_TRUE(q.weights.isZero(0.0));
    const std::size_t dims[] = {57, 8, 5};
    const auto mz = MlpParams::zeros(dims, Activation::elu);
    const auto mq = std::get<MlpParams>(load_weights(save_weights(mz, dir / "m.json")));
    ASSERT_EQ(mq.layers.size(), 2u);
    EXPECT_TRUE(mq.layers[1].weight.isZero(0.0));
}

TEST_F(Weights, MlpRoundTrip)
{
    const std::size_t dims[] = {57, 12, 12, 3};
    const auto p = MlpParams::random_he(dims, Activation::relu, 9);
    const auto q = std::get<MlpParams>(load_weights(save_weights(p, dir / "mlp.json")));
    ASSERT_EQ(q.layers.size(), 3u);
    EXPECT_EQ(q.hidden_activation, Activation::relu);
    for (std::size_t l = 0; l < 3; ++l) {
        EXPECT_TRUE(q.layers[l].weight == p.layers[l].weight);
        EXPECT_TRUE(q.layers[l].bias == p.layers[l].bias);
    }
}

TEST_F(Weights, DeterministicBytes)
{
    const auto p = RbmParams::random_uniform(8, 3, 0.2, 1);
    save_weights(p, dir / "a.json");
    save_weights(p, dir / "b.json");
    EXPECT_EQ(read_file(dir / "a.weights.bin"), read_file(dir / "b.weights.bin"));
    EXPECT_EQ(read_file(dir / "a.bias.bin"), read_file(dir / "b.bias.bin"));
    // Little-endian, row-major, no header.
    const std::string w = read_file(dir / "a.weights.bin");
    ASSERT_EQ(w.size(), 24u * 8u * 8u);
    double first = 0.0;
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) | static_cast<std::uint8_t>(w[static_cast<std::size_t>(i)]);
    }
    std::memcpy(&first, &bits, sizeof first);
    EXPECT_EQ(first, p.weights(0, 0));
}

TEST_F(Weights, TruncatedTensorIsSizeError)
{
    const auto m = save_weights(RbmParams::random_uniform(4, 1, 0.1, 2), dir / "t.json");
    const auto bin = dir / "t.weights.bin";
    std::string bytes = read_file(bin);
    bytes.pop_back();
    atomic_write(bin, bytes);
    try {
        load_weights(m);
        FAIL() << "expected a size error";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("bytes"), std::string::npos);
    }
}

TEST_F(Weights, ChecksumMismatch)
{
    const auto m = save_weights(RbmParams::random_uniform(4, 1, 0.1, 2), dir / "c.json");
    const auto bin = dir / "c.bias.bin";
    std::string bytes = read_file(bin);
    bytes[0] = static_cast<char>(bytes[0] ^ 0x01);
    atomic_write(bin, bytes);
    EXPECT_THROW(load_weights(m), FormatError);
}

TEST_F(Weights, ManifestErrors)
{
    atomic_write(dir / "bad.json", "{not json");
    EXPECT_THROW(load_weights(dir / "bad.json"), FormatError);
    atomic_write(dir / "other.json", R"({"format":"other"})");
    EXPECT_THROW(load_weights(dir / "other.json"), FormatError);
    const auto m = save_weights(RbmParams::random_uniform(4, 1, 0.1, 2), dir / "v.json");
    std::string text = read_file(m);
    text.replace(text.find("\"format_version\": 1"), 19, "\"format_version\": 2");
    atomic_write(m, text);
    EXPECT_THROW(load_weights(m), FormatError);
    EXPECT_THROW(load_weights(dir / "missing.json"), FormatError);
}

using Events = TempDir;

TEST_F(Events, ColumnNames)
{
    const auto& n = event_column_names();
    ASSERT_EQ(n.size(), 57u);
    EXPECT_EQ(n[0], "met_pt");
    EXPECT_EQ(n[2], "met_phi");
    EXPECT_EQ(n[3], "e1_pt");
    EXPECT_EQ(n[15], "mu1_pt");
    EXPECT_EQ(n[27], "j1_pt");
    EXPECT_EQ(n[56], "j10_phi");
}

TEST_F(Events, SynthRoundTripAtNineDigits)
{
    const auto ev = synth_events(300, 11, 0.1);
    save_events(ev, dir / "e.csv");
    const auto back = load_events(dir / "e.csv");
    ASSERT_EQ(back.size(), ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) {
        for (std::size_t f = 0; f < kEventFeatures; ++f) {
            EXPECT_EQ(back[i].features[f], round9(ev[i].features[f]));
        }
        EXPECT_EQ(back[i].is_anomaly, ev[i].is_anomaly);
    }
    // A second trip is the identity.
    EXPECT_EQ(format_events(back), format_events(load_events(dir / "e.csv")));
    EXPECT_EQ(read_file(dir / "e.csv"), format_events(back));
}

TEST_F(Events, UnlabelledTable)
{
    auto ev = synth_events(5, 1, 0.0);
    ev[2].is_anomaly.reset();
    const std::string text = format_events(ev);
    EXPECT_EQ(text.substr(0, text.find('\n')), header());
    const auto back = parse_events(text);
    ASSERT_EQ(back.size(), 5u);
    EXPECT_FALSE(back[0].is_anomaly);
}

TEST_F(Events, EmptyFiles)
{
    EXPECT_TRUE(parse_events("").empty());
    EXPECT_TRUE(parse_events(header() + "\n").empty());
    atomic_write(dir / "empty.csv", "");
    EXPECT_TRUE(load_events(dir / "empty.csv").empty());
}

TEST_F(Events, Rejections)
{
    EXPECT_THROW(parse_events(header() + "\n" + row(56) + "\n"), FormatError);
    EXPECT_THROW(parse_events(header() + "\n" + row(58) + "\n"), FormatError);
    EXPECT_THROW(parse_events(header() + "\n" + row(56) + ",abc\n"), FormatError);
    EXPECT_THROW(parse_events(header() + "\n" + row(56) + ",\n"), FormatError);
    // met_phi beyond pi
    std::string bad_phi = "1,0,3.2," + row(54);
    EXPECT_THROW(parse_events(header() + "\n" + bad_phi + "\n"), FormatError);
    EXPECT_NO_THROW(parse_events(header() + "\n" + "1,0,3.14," + row(54) + "\n"));
    EXPECT_THROW(parse_events(row(57) + "\n"), FormatError);  // not a header
    EXPECT_THROW(parse_events(header() + ",label\n"), FormatError);
    EXPECT_THROW(parse_events(header() + ",is_anomaly\n" + row(57) + ",2\n"), FormatError);
}

TEST_F(Events, CrlfAndBlankLines)
{
    const auto ev = synth_events(3, 2, 0.0);
    std::string text = format_events(ev);
    std::string crlf;
    for (char c : text) {
        if (c == '\n') {
            crlf += "\r\n\r\n";
        } else {
            crlf += c;
        }
    }
    EXPECT_EQ(format_events(parse_events(crlf)), text);
}

TEST_F(Events, AtomicWriteReplaces)
{
    const auto p = dir / "x.txt";
    atomic_write(p, "one");
    atomic_write(p, "two");
    EXPECT_EQ(read_file(p), "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) {
        ++files;
    }
    EXPECT_EQ(files, 1u);
}
