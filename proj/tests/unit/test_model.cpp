#include <doctest.h>

#include <cmath>

#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "affectfeed/metrics.hpp"
#include "affectfeed/model.hpp"
#include "affectfeed/random.hpp"
#include "affectfeed/synth.hpp"
#include "affectfeed/text.hpp"
#include "fixtures.hpp"

using namespace affectfeed;
using namespace affectfeed::model;

namespace {

ModelConfig tiny(std::size_t classes = 4) {
    ModelConfig c;
    c.content = {64, 4, {5}, 3};
    c.user = {32, 3, {}, 2};
    c.dense_dim = 2;
    c.network_dim = 3;
    c.fusion_hidden = {4};
    c.n_classes = classes;
    c.seed = 21;
    return c;
}

TowerInput random_input(Rng& rng, std::size_t hash_dim, std::size_t dense) {
    TowerInput in;
    for (std::size_t i = 0, n = rng.below(5); i < n; ++i) in.buckets.push_back(static_cast<std::uint32_t>(rng.below(hash_dim)));
    for (std::size_t i = 0; i < dense; ++i) in.dense.push_back(rng.normal());
    return in;
}

std::vector<TrainingExample> random_examples(Rng& rng, const ModelConfig& c, std::size_t n) {
    std::vector<TrainingExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({random_input(rng, c.content.hash_dim, c.dense_dim),
                       random_input(rng, c.user.hash_dim, c.network_dim),
                       static_cast<dataset::LabelMask>(rng.below(1u << c.n_classes))});
    }
    return out;
}

// Straight-line forward pass: y = W x + b per layer, ReLU on all but the last.
std::vector<double> apply(const std::vector<Layer>& layers, std::vector<double> x) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& l = layers[k];
        REQUIRE(x.size() == l.in);
        std::vector<double> y = l.b;
        for (std::size_t o = 0; o < l.out; ++o) {
            for (std::size_t i = 0; i < l.in; ++i) y[o] += l.w[o * l.in + i] * x[i];
            if (k + 1 < layers.size()) y[o] = std::max(0.0, y[o]);
        }
        x = std::move(y);
    }
    return x;
}

std::vector<double> tower_oracle(const Tower& t, const TowerInput& in) {
    std::vector<double> x(t.embed_dim, 0.0);
    for (std::size_t d = 0; d < t.embed_dim; ++d) {
        for (auto b : in.buckets) x[d] += t.embedding[b * t.embed_dim + d] / static_cast<double>(in.buckets.size());
    }
    x.insert(x.end(), in.dense.begin(), in.dense.end());
    return apply(t.layers, x);
}

std::vector<double> logits_oracle(const TwoTowerModel& m, const TowerInput& c, const TowerInput& u) {
    auto a = tower_oracle(m.content, c);
    auto b = tower_oracle(m.user, u);
    a.insert(a.end(), b.begin(), b.end());
    return apply(m.fusion, a);
}

}  // namespace

TEST_CASE("initialization has the configured shapes and bounds") {
    auto c = tiny();
    auto m = TwoTowerModel::initialize(c);
    CHECK(m.content.embedding.size() == 64 * 4);
    REQUIRE(m.content.layers.size() == 2);
    CHECK(m.content.layers[0].in == 6);
    CHECK(m.content.layers[0].out == 5);
    CHECK(m.content.layers[1].out == 3);
    REQUIRE(m.user.layers.size() == 1);
    CHECK(m.user.layers[0].in == 6);
    REQUIRE(m.fusion.size() == 2);
    CHECK(m.fusion[0].in == 5);
    CHECK(m.fusion[1].out == 4);
    std::size_t expected = 64 * 4 + (6 * 5 + 5) + (5 * 3 + 3) + 32 * 3 + (6 * 2 + 2) + (5 * 4 + 4) + (4 * 4 + 4);
    CHECK(m.parameter_count() == expected);
    for (const auto& l : m.fusion) {
        for (double w : l.w) CHECK(std::abs(w) <= 1.0 / std::sqrt(static_cast<double>(l.in)));
        for (double b : l.b) CHECK(b == 0.0);
    }
    CHECK(m == TwoTowerModel::initialize(c));
    c.seed = 22;
    CHECK_FALSE(m == TwoTowerModel::initialize(c));
    c.content.embed_dim = 0;
    CHECK_THROWS_AS(TwoTowerModel::initialize(c), Error);
}

TEST_CASE("a zero model predicts one half everywhere") {
    auto m = TwoTowerModel::zeros(tiny());
    Rng rng(1);
    auto ex = random_examples(rng, tiny(), 5);
    for (const auto& e : ex) {
        for (double p : predict(m, e.content, e.user)) CHECK(p == 0.5);
        CHECK(example_loss(m, e) == doctest::Approx(4 * std::log(2.0)).epsilon(1e-14));
    }
}

TEST_CASE("forward pass equals a direct computation") {
    auto m = TwoTowerModel::initialize(tiny());
    Rng rng(2);
    for (const auto& e : random_examples(rng, tiny(), 50)) {
        auto got = logits(m, e.content, e.user);
        auto want = logits_oracle(m, e.content, e.user);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        double loss = 0.0;
        for (std::size_t i = 0; i < want.size(); ++i) {
            double y = (e.labels >> i) & 1u;
            double p = 1.0 / (1.0 + std::exp(-want[i]));
            loss -= y * std::log(p) + (1 - y) * std::log(1 - p);
        }
        CHECK(example_loss(m, e) == doctest::Approx(loss).epsilon(1e-10));
    }
}

TEST_CASE("two-class loss matches a hand computation") {
    ModelConfig c = tiny(2);
    c.fusion_hidden.clear();
    auto m = TwoTowerModel::zeros(c);
    m.fusion[0].b = {1.0, -2.0};
    TrainingExample e{{{}, {0, 0}}, {{}, {0, 0, 0}}, 0b01};
    // -log(sigmoid(1)) - log(1 - sigmoid(-2))
    const double want = std::log1p(std::exp(-1.0)) + std::log1p(std::exp(-2.0));
    CHECK(example_loss(m, e) == doctest::Approx(want).epsilon(1e-14));
    CHECK(bce_with_logit(1.0, 1.0) == doctest::Approx(std::log1p(std::exp(-1.0))));
    CHECK(bce_with_logit(800.0, 0.0) == doctest::Approx(800.0));
    CHECK(std::isfinite(bce_with_logit(-800.0, 1.0)));
}

TEST_CASE("analytic gradients agree with finite differences") {
    Rng rng(3);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto c = tiny();
        c.seed = seed;
        auto m = TwoTowerModel::initialize(c);
        auto batch = random_examples(rng, c, 8);
        auto report = grad_check(m, batch, {1e-5, 24, 1e-6, seed});
        CHECK(report.checked > 100);
        CHECK(report.max_relative_error < 1e-4);
    }
    auto m = TwoTowerModel::initialize(tiny());
    auto batch = random_examples(rng, tiny(), 8);
    GradientFn wrong = [](const TwoTowerModel& model, std::span<const TrainingExample> b, TwoTowerModel& g) {
        double loss = loss_and_gradient(model, b, g);
        for (auto& l : g.user.layers) {
            for (auto& w : l.w) w *= 1.5;
        }
        return loss;
    };
    auto bad = grad_check(m, batch, {}, wrong);
    CHECK(bad.max_relative_error > 1e-2);
    CHECK(bad.worst_parameter.rfind("user.", 0) == 0);
}

TEST_CASE("a zero learning rate leaves parameters unchanged") {
    Rng rng(4);
    auto m = TwoTowerModel::initialize(tiny());
    auto ex = random_examples(rng, tiny(), 40);
    TrainConfig tc;
    tc.learning_rate = 0.0;
    tc.batch_size = 7;
    auto r = train(m, ex, {}, tc);
    CHECK(r.model == m);
    REQUIRE(r.epochs.size() == 4);
    CHECK(r.epochs[0].train_loss == r.epochs[3].train_loss);
    CHECK_FALSE(r.epochs[0].validation_loss);
    tc.learning_rate = -1;
    CHECK_THROWS_AS(train(m, ex, {}, tc), Error);
    tc.learning_rate = 0.1;
    tc.batch_size = 0;
    CHECK_THROWS_AS(train(m, ex, {}, tc), Error);
    tc.batch_size = 4;
    CHECK_THROWS_AS(train(m, {}, {}, tc), Error);
}

TEST_CASE("training is deterministic and fits a separable set") {
    auto c = tiny(2);
    std::vector<TrainingExample> ex;
    for (std::uint32_t i = 0; i < 40; ++i) {
        const bool pos = i % 2 == 0;
        ex.push_back({{{pos ? 1u : 2u, 10u + i % 5}, {0, 0}}, {{i % 3}, {0, 0, 0}}, pos ? 0b01u : 0b10u});
    }
    TrainConfig tc;
    tc.epochs = 60;
    tc.learning_rate = 0.05;
    tc.batch_size = 8;
    tc.seed = 9;
    auto a = train(TwoTowerModel::initialize(c), ex, ex, tc);
    auto b = train(TwoTowerModel::initialize(c), ex, ex, tc);
    CHECK(a.model == b.model);
    CHECK(a.epochs.back().train_loss < 0.1 * a.epochs.front().train_loss);
    CHECK(*a.epochs.back().validation_loss == a.epochs.back().train_loss);
    auto auc = per_class_auc(a.model, ex);
    CHECK(*auc[0] == 1.0);
    CHECK(*auc[1] == 1.0);
}

TEST_CASE("divergent training raises NonFiniteLoss") {
    Rng rng(5);
    auto ex = random_examples(rng, tiny(), 32);
    TrainConfig tc;
    tc.learning_rate = 1e200;
    try {
        train(TwoTowerModel::initialize(tiny()), ex, {}, tc);
        FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteLoss);
    }
}

TEST_CASE("inputs hash tokens and validate dense widths") {
    auto c = tiny();
    auto p = fixtures::post("p1", "u1", 0, "Hello world");
    p.body = "hello";
    p.ocr_text = "sign";
    p.dense_features = {1.0, 2.0};
    auto in = content_input(p, c);
    REQUIRE(in.buckets.size() == 4);
    CHECK(in.buckets[0] == fnv1a("hello") % 64);
    CHECK(in.buckets[0] == in.buckets[2]);
    CHECK(in.buckets[3] == fnv1a("sign") % 64);
    CHECK(in.dense == std::vector<double>{1.0, 2.0});
    auto u = fixtures::user("u1", {"pets"});
    u.bio_text = "dog";
    u.network_stats = {0, 0, 0};
    auto ui = user_input(u, c);
    CHECK(ui.buckets == std::vector<std::uint32_t>{static_cast<std::uint32_t>(fnv1a("dog") % 32),
                                                  static_cast<std::uint32_t>(fnv1a("interest:pets") % 32)});
    p.dense_features = {1.0};
    CHECK_THROWS_AS(content_input(p, c), Error);
}

TEST_CASE("examples refer to known posts and users") {
    auto out = synth::synth_corpus(1, [] {
        synth::SynthConfig s;
        s.n_posts = 20;
        s.n_users = 5;
        return s;
    }());
    ModelConfig c;
    std::vector<dataset::LabeledExample> rows = {{"p000000", "u00000", 1, dataset::kFromEngagement}};
    auto ex = make_examples(out.corpus, rows, c);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].labels == 1u);
    rows.push_back({"nope", "u00000", 1, dataset::kFromEngagement});
    CHECK_THROWS_AS(make_examples(out.corpus, rows, c), Error);
}

TEST_CASE("post embeddings depend on the post alone") {
    auto m = TwoTowerModel::initialize(tiny());
    std::vector<Post> posts = {fixtures::post("a", "u1", 0, "cat"), fixtures::post("b", "u2", 0, "dog")};
    for (auto& p : posts) p.dense_features = {0.5, -0.5};
    auto table = export_embedding(m, posts);
    REQUIRE(table.size() == 2);
    CHECK(table[0].first == "a");
    CHECK(table[0].second.size() == 3);
    CHECK(table[0].second == encode_content(m, posts[0]));
    CHECK(table[0].second == tower_oracle(m.content, content_input(posts[0], m.config)));

    fixtures::TempDir dir("embedding");
    write_file_atomic(dir.path() / "e.csv", embedding_to_csv(table));
    CHECK(read_embedding_csv(dir.path() / "e.csv") == table);
}

TEST_CASE("checkpoints round-trip bit for bit") {
    Rng rng(6);
    auto c = tiny();
    auto m = TwoTowerModel::initialize(c);
    m.fusion[1].b[0] = 0.1 + 0.2;
    fixtures::TempDir dir("ckpt");
    save_checkpoint(m, dir.path() / "m.ckpt");
    auto back = load_checkpoint(dir.path() / "m.ckpt");
    CHECK(back == m);
    CHECK(back.config.fusion_hidden == c.fusion_hidden);
    CHECK(back.config.user.mlp_hidden.empty());
    CHECK(checkpoint_to_text(back) == checkpoint_to_text(m));

    auto text = checkpoint_to_text(m);
    CHECK_THROWS_AS(checkpoint_from_text("not a checkpoint\n"), Error);
    CHECK_THROWS_AS(checkpoint_from_text(text.substr(0, text.size() / 2)), Error);
    auto nan = text;
    nan.replace(nan.rfind(' ') + 1, std::string::npos, "nan\n");
    CHECK_THROWS_AS(checkpoint_from_text(nan), Error);
}

TEST_CASE("auc handles ties and degenerate columns") {
    std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
    const bool y[] = {false, false, true, true};
    CHECK(*auc_roc(s, y) == doctest::Approx(0.75));
    std::vector<double> tied = {0.5, 0.5, 0.5, 0.5};
    CHECK(*auc_roc(tied, y) == 0.5);
    const bool one[] = {true, true, true, true};
    CHECK_FALSE(auc_roc(s, one));
    const bool short_labels[] = {true};
    CHECK_THROWS_AS(auc_roc(s, short_labels), Error);
}
