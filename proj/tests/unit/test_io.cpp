#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>

#include "json.hpp"

#include "fixtures.hpp"
#include "thermoseer/errors.hpp"
#include "thermoseer/io.hpp"

namespace thermoseer {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("thermoseer_io_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    fs::path dir_;
};

TEST(FormatDouble, RoundTripsExactly) {
    for (double v : {0.1, 1.0 / 3.0, 1450.0, -273.0999999, 6.02214076e23, 5e-324}) {
        EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
    }
    EXPECT_EQ(format_double(2.5), "2.5");
    EXPECT_THROW(format_double(std::nan("")), Error);
}

TEST(Dataset, JsonlLayout) {
    const auto wall = testing::small_wall(8, 3, 5);
    const std::string text = dataset_to_jsonl(wall);
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    const auto header = nlohmann::json::parse(line);
    EXPECT_EQ(header["format"], "thermoseer-dataset");
    EXPECT_EQ(header["version"], 1);
    EXPECT_EQ(header["n"], 5);
    EXPECT_EQ(header["schedule"].size(), 8u);
    EXPECT_TRUE(header["provenance"].contains("seed"));
    std::getline(is, line);
    const auto record = nlohmann::json::parse(line);
    for (const char* key : {"wall_id", "layer", "point_index", "d_mm", "t_rd_s", "n", "durations_s", "curves",
                            "features"}) {
        EXPECT_TRUE(record.contains(key)) << key;
    }
    EXPECT_EQ(record["curves"].size(), 5u);
    EXPECT_EQ(record["curves"][0].size(), 5u);
    EXPECT_TRUE(record["features"].contains("h_mm"));
}

TEST(Dataset, RoundTripIsByteIdentical) {
    const auto wall = testing::small_wall(9, 4, 17);
    const std::string text = dataset_to_jsonl(wall);
    const WallDataset back = dataset_from_jsonl(text);
    EXPECT_EQ(back.profiles(), wall.profiles());
    EXPECT_EQ(back.schedule().values(), wall.schedule().values());
    EXPECT_EQ(dataset_to_jsonl(back), text);
}

TEST(Dataset, MalformedInputsAreDataErrors) {
    const std::string text = dataset_to_jsonl(testing::small_wall(8, 3, 5));
    auto expect_data_error = [](const std::string& bad) {
        try {
            dataset_from_jsonl(bad, "bad.jsonl");
            FAIL() << "expected a data error";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Data) << e.what();
        }
    };
    expect_data_error("");
    expect_data_error("{\"format\":\"other\"}\n");
    expect_data_error(text.substr(0, text.size() / 2));
    std::string wrong_n = text;
    wrong_n.replace(wrong_n.find("\"n\":5", wrong_n.find('\n')), 5, "\"n\":6");
    expect_data_error(wrong_n);
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
    MappingModel m = init_model(4, 77);
    m.scaler.fitted = true;
    m.scaler.feature_mean = {20.5, 31.25, 52.8, 15.0};
    m.meta.epochs_run = 12;
    m.meta.final_loss = 0.000123;
    const std::string text = checkpoint_to_json(m);
    const MappingModel back = checkpoint_from_json(text);
    for (std::size_t l = 0; l < m.affine_count(); ++l) {
        EXPECT_EQ(back.weights[l], m.weights[l]);
        EXPECT_EQ(back.biases[l], m.biases[l]);
    }
    EXPECT_EQ(back.scaler, m.scaler);
    EXPECT_EQ(back.meta, m.meta);
    EXPECT_EQ(back.seed, 77u);
    EXPECT_EQ(checkpoint_to_json(back), text);
}

TEST(Checkpoint, WeightsAreRowMajor) {
    const MappingModel m = init_model(2, 5);
    const auto j = nlohmann::json::parse(checkpoint_to_json(m));
    EXPECT_EQ(j["format"], "thermoseer-ckpt");
    EXPECT_EQ(j["layer_widths"], nlohmann::json::parse("[6,12,24,12,6,2]"));
    const auto& w0 = j["weights"][0];
    ASSERT_EQ(w0.size(), 36u);
    EXPECT_EQ(w0[1].get<double>(), m.weights[0](0, 1));
    EXPECT_EQ(w0[6].get<double>(), m.weights[0](1, 0));
}

TEST(Checkpoint, VersionAndShapeErrors) {
    auto j = nlohmann::json::parse(checkpoint_to_json(init_model(2, 5)));
    j["version"] = 2;
    try {
        checkpoint_from_json(j.dump());
        FAIL() << "expected a checkpoint error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Checkpoint);
    }
    j["version"] = 1;
    j["weights"][3].erase(0);
    EXPECT_THROW(checkpoint_from_json(j.dump()), Error);
    EXPECT_THROW(checkpoint_from_json("not json"), Error);
}

TEST_F(IoTest, AtomicWriteAndReload) {
    const auto wall = testing::small_wall(8, 3, 5);
    save_dataset(path("w.jsonl"), wall);
    EXPECT_EQ(read_file(path("w.jsonl")), dataset_to_jsonl(wall));
    save_checkpoint(path("m.json"), init_model(3, 1));
    EXPECT_EQ(checkpoint_to_json(load_checkpoint(path("m.json"))), checkpoint_to_json(init_model(3, 1)));
    for (const auto& entry : fs::directory_iterator(path(""))) {
        EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos);
    }
    EXPECT_THROW(load_dataset(path("missing.jsonl")), Error);
    try {
        load_checkpoint(path("missing.json"));
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Checkpoint);
    }
}

TEST(Reports, EvalJsonAndCsv) {
    EvalReport r;
    r.scores = {{3, 2, 40.0, 0.25}, {3, 4, 80.0, 0.5}};
    r.layers = {summarize(std::vector<double>{0.25, 0.5}, 3)};
    r.overall = summarize(std::vector<double>{0.25, 0.5}, 0);
    EXPECT_EQ(eval_report_csv(r), "layer,point,reop\n3,2,0.25\n3,4,0.5\n");
    const auto j = nlohmann::json::parse(eval_report_json(r));
    EXPECT_EQ(j["format"], "thermoseer-eval");
    EXPECT_EQ(j["layers"][0]["median"], 0.375);
    EXPECT_EQ(j["layers"][0]["q1"], 0.3125);
    EXPECT_EQ(j["points"].size(), 2u);
}

TEST(Reports, TimingLossField) {
    const std::vector<LayerTiming> t{{31, 0.002, 0.001, 0.003}};
    const auto j = nlohmann::json::parse(timing_json(t));
    EXPECT_EQ(j["layers"][0]["layer"], 31);
    for (const char* key : {"map_seconds", "reconstruct_seconds", "total_seconds"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    const std::vector<double> loss{0.5, 0.25};
    const std::vector<double> lr{0.001, 0.0005};
    EXPECT_EQ(loss_csv(loss, lr), "epoch,loss,lr\n1,0.5,0.001\n2,0.25,0.00050000000000000001\n");
    FieldFrame f;
    f.local_time = 6.0;
    f.positions = {0.0, 160.0};
    f.temps = {900.0, 25.0};
    f.extrapolated = {true, false};
    const std::vector<FieldFrame> frames{f};
    EXPECT_EQ(field_csv(frames), "local_time_s,position_mm,temp_c,extrapolated\n6,0,900,1\n6,160,25,0\n");
}

}  // namespace
}  // namespace thermoseer
