// Keypoint selection (confidence + relevance filtering) and the progressive
// cross-modal refinement stack, each checked against straight-line scalar
// oracles that read the same weights out of the parameter map.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "groundsel/dks.hpp"
#include "groundsel/encoders.hpp"
#include "groundsel/error.hpp"
#include "groundsel/gradcheck.hpp"
#include "groundsel/ops.hpp"
#include "groundsel/tpm.hpp"

using namespace groundsel;

#include "oracles.hpp"


// ========================================================================
// attention map pooling + selection

TEST_CASE("pooling a uniform attention map keeps every column equal and selection falls back to index order") {
  Tensor uniform_map = Tensor::full({3, 5}, 0.2);
  std::vector<Tensor> maps{uniform_map, uniform_map};
  std::vector<double> pooled = pool_attention(maps);
  REQUIRE(pooled.size() == 5);
  for (double v : pooled) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));

  PoolSelection sel = attention_pool_select(maps, 3);
  CHECK(sel.picked == std::vector<int64_t>{0, 1, 2});
}

TEST_CASE("pooling averages over heads and query rows, and ranks the dominant column first") {
  // Single head, two query rows over three keys; column 2 dominates.
  Tensor m = from_mat({{0.1, 0.2, 0.7}, {0.1, 0.3, 0.6}});
  std::vector<double> pooled = pool_attention({m});
  CHECK(pooled[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(pooled[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(pooled[2] == doctest::Approx(0.65).epsilon(1e-12));

  CHECK(attention_pool_select({m}, 1).picked == std::vector<int64_t>{2});
  CHECK(attention_pool_select({m}, 2).picked == std::vector<int64_t>{2, 1});
  CHECK(attention_pool_select({m}, 3).picked == std::vector<int64_t>{2, 1, 0});
}

TEST_CASE("pooled selection matches a brute-force mean-and-sort oracle on random maps") {
  std::mt19937_64 rng(401);
  Tensor m0 = Tensor::uniform({3, 5}, rng, 0.0, 1.0);
  Tensor m1 = Tensor::uniform({3, 5}, rng, 0.0, 1.0);
  Mat a = to_mat(m0), b = to_mat(m1);
  std::vector<double> expect(5, 0.0);
  for (size_t c = 0; c < 5; ++c) {
    for (size_t r = 0; r < 3; ++r) expect[c] += a[r][c] + b[r][c];
    expect[c] /= 6.0;
  }
  for (int64_t k = 1; k <= 5; ++k) {
    PoolSelection sel = attention_pool_select({m0, m1}, k);
    REQUIRE(sel.pooled.size() == 5);
    for (size_t c = 0; c < 5; ++c) CHECK(sel.pooled[c] == doctest::Approx(expect[c]).epsilon(1e-12));
    CHECK(sel.picked == o_argtopk(expect, k));
  }
}

TEST_CASE("selection rejects budgets outside [1, K] and inconsistent head maps") {
  Tensor m = Tensor::full({2, 4}, 0.25);
  CHECK_THROWS_AS(attention_pool_select({m}, 0), ContractError);
  CHECK_THROWS_AS(attention_pool_select({m}, 5), ContractError);
  CHECK_THROWS_AS(attention_pool_select({}, 1), ContractError);
  Tensor other = Tensor::full({2, 3}, 0.25);
  CHECK_THROWS_AS(pool_attention({m, other}), ContractError);
}

TEST_CASE("scaling every head map by the same positive factor preserves the selection order") {
  std::mt19937_64 rng(402);
  Tensor m = Tensor::uniform({4, 6}, rng, 0.0, 1.0);
  Tensor scaled = Tensor::zeros({4, 6});
  {
    auto d = scaled.mutable_data();
    auto s = m.data();
    for (int64_t i = 0; i < m.size(); ++i) d[i] = 3.5 * s[i];
  }
  for (int64_t k = 1; k <= 6; ++k) {
    CHECK(attention_pool_select({m}, k).picked == attention_pool_select({scaled}, k).picked);
  }
}

// ========================================================================
// a single refinement layer

TEST_CASE("one refinement layer reproduces a straight-line scalar oracle end to end") {
  const int64_t C = 4, H = 4, heads = 2, ffn = 8, K = 4, W = 3, M = 5;
  std::mt19937_64 rng(77);
  ParamMap pm;
  TpmLayer layer(pm, "layer", C, H, heads, ffn, rng);
  randomize_params(pm, rng, -0.8, 0.8);

  SeedPoints seeds = make_seeds(M, C, rng);
  WordFeatures words = make_words(W, H, rng);
  KeypointSet points = keypoints_from_seeds(make_seeds(K, C, rng));

  Graph g(false);
  Tensor seed_qk = concat(g, {seeds.features, seeds.coords_t});
  const int64_t k_r = 2;
  TpmLayerOutput out = layer(g, points, words, seeds, seed_qk, k_r);

  // Oracle, mirroring the documented block order.
  const Mat coords = to_mat(points.coords_t);
  Mat xp = to_mat(points.features);
  {
    Mat qk = o_concat_cols(xp, coords);
    xp = o_layer_norm(pm, "layer.point_self_norm",
                      o_add(xp, o_attention(pm, "layer.point_self", qk, qk, xp).out));
  }
  {
    Mat q = o_concat_cols(xp, coords);
    Mat sk = o_concat_cols(to_mat(seeds.features), to_mat(seeds.coords_t));
    xp = o_layer_norm(
        pm, "layer.point_seed_norm",
        o_add(xp, o_attention(pm, "layer.point_seed", q, sk, to_mat(seeds.features)).out));
  }
  Mat xw = to_mat(words.features);
  xw = o_layer_norm(pm, "layer.word_self_norm",
                    o_add(xw, o_attention(pm, "layer.word_self", xw, xw, xw).out));
  Mat point_qk = o_concat_cols(xp, coords);
  OracleAttention wp = o_attention(pm, "layer.word_to_point", xw, point_qk, xp);
  OracleAttention pw = o_attention(pm, "layer.point_to_word", point_qk, xw, xw);
  Mat xw2 = o_layer_norm(pm, "layer.word_cross_norm", o_add(xw, wp.out));
  Mat xp2 = o_layer_norm(pm, "layer.point_cross_norm", o_add(xp, pw.out));
  Mat xp3 = o_layer_norm(pm, "layer.point_ffn_norm",
                         o_add(xp2, o_mlp2(pm, "layer.point_ffn", xp2)));
  Mat xw3 = o_layer_norm(pm, "layer.word_ffn_norm", o_add(xw2, o_mlp2(pm, "layer.word_ffn", xw2)));

  CHECK(max_abs_diff(xp3, out.refined_points) < 1e-9);
  CHECK(max_abs_diff(xw3, out.words.features) < 1e-9);
  CHECK(out.words.token_ids == words.token_ids);

  // Cross-attention maps: language queries over keypoint keys, rows sum to 1.
  REQUIRE(out.cross_attn.size() == static_cast<size_t>(heads));
  std::vector<double> pooled_expect(static_cast<size_t>(K), 0.0);
  for (int64_t h = 0; h < heads; ++h) {
    REQUIRE(out.cross_attn[static_cast<size_t>(h)].dim(0) == W);
    REQUIRE(out.cross_attn[static_cast<size_t>(h)].dim(1) == K);
    CHECK(max_abs_diff(wp.attn[static_cast<size_t>(h)], out.cross_attn[static_cast<size_t>(h)]) <
          1e-9);
    for (size_t r = 0; r < static_cast<size_t>(W); ++r) {
      double sum = 0.0;
      for (size_t c = 0; c < static_cast<size_t>(K); ++c) {
        sum += wp.attn[static_cast<size_t>(h)][r][c];
        pooled_expect[c] += wp.attn[static_cast<size_t>(h)][r][c];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  for (double& v : pooled_expect) v /= static_cast<double>(heads * W);
  REQUIRE(out.pooled.size() == static_cast<size_t>(K));
  for (size_t c = 0; c < pooled_expect.size(); ++c) {
    CHECK(out.pooled[c] == doctest::Approx(pooled_expect[c]).epsilon(1e-9));
  }

  // Selection takes the top pooled columns and gathers the refined features.
  std::vector<int64_t> picked = o_argtopk(pooled_expect, k_r);
  REQUIRE(out.selected.count() == k_r);
  for (int64_t i = 0; i < k_r; ++i) {
    const auto p = static_cast<size_t>(picked[static_cast<size_t>(i)]);
    CHECK(out.selected.seed_indices[static_cast<size_t>(i)] == points.seed_indices[p]);
    CHECK(out.selected.coords[static_cast<size_t>(i)] == points.coords[p]);
    for (int64_t c = 0; c < C; ++c) {
      CHECK(out.selected.features.at(i, c) ==
            doctest::Approx(xp3[p][static_cast<size_t>(c)]).epsilon(1e-9));
    }
  }
}

TEST_CASE("a refinement layer refuses fewer than two keypoints or an oversized budget") {
  const int64_t C = 4, H = 4;
  std::mt19937_64 rng(78);
  ParamMap pm;
  TpmLayer layer(pm, "layer", C, H, 2, 8, rng);
  SeedPoints seeds = make_seeds(5, C, rng);
  WordFeatures words = make_words(3, H, rng);
  Graph g(false);
  Tensor seed_qk = concat(g, {seeds.features, seeds.coords_t});

  KeypointSet one = keypoints_from_seeds(make_seeds(1, C, rng));
  CHECK_THROWS_AS(layer(g, one, words, seeds, seed_qk, 1), ContractError);

  KeypointSet three = keypoints_from_seeds(make_seeds(3, C, rng));
  CHECK_THROWS_AS(layer(g, three, words, seeds, seed_qk, 4), ContractError);
  CHECK_THROWS_AS(layer(g, three, words, seeds, seed_qk, 0), ContractError);
}

TEST_CASE("refinement layer gradients (both streams and the gathered selection) pass finite differences") {
  const int64_t C = 4, H = 4, K = 4, W = 3, M = 5;
  std::mt19937_64 rng(79);
  ParamMap pm;
  TpmLayer layer(pm, "layer", C, H, 2, 5, rng);

  SeedPoints seeds = make_seeds(M, C, rng);
  WordFeatures words = make_words(W, H, rng);
  KeypointSet points = keypoints_from_seeds(make_seeds(K, C, rng));

  // The pooled scores decide a discrete selection; make sure the chosen
  // configuration keeps them well separated so the tiny finite-difference
  // steps cannot flip the ranking mid-check.
  {
    Graph g(false);
    Tensor seed_qk = concat(g, {seeds.features, seeds.coords_t});
    TpmLayerOutput probe = layer(g, points, words, seeds, seed_qk, 2);
    std::vector<double> pooled = probe.pooled;
    std::sort(pooled.begin(), pooled.end());
    for (size_t i = 1; i < pooled.size(); ++i) REQUIRE(pooled[i] - pooled[i - 1] > 1e-4);
  }

  Tensor read_p = Tensor::uniform({K, C}, rng, 0.5, 1.5);
  Tensor read_w = Tensor::uniform({W, H}, rng, 0.5, 1.5);
  Tensor read_sel = Tensor::uniform({2, C}, rng, 0.5, 1.5);
  auto result = finite_diff_check(
      [&](Graph& g) {
        Tensor seed_qk = concat(g, {seeds.features, seeds.coords_t});
        TpmLayerOutput out = layer(g, points, words, seeds, seed_qk, 2);
        Tensor loss = mean_all(g, mul(g, out.refined_points, read_p));
        loss = add(g, loss, mean_all(g, mul(g, out.words.features, read_w)));
        return add(g, loss, mean_all(g, mul(g, out.selected.features, read_sel)));
      },
      all_params(pm));
  CAPTURE(result.worst);
  CHECK(result.max_rel_err < 1e-4);
}

// ========================================================================
// the full progressive stack

TEST_CASE("four stacked layers halve 512 keypoints down the 256/128/64/32 schedule with nested indices") {
  const int64_t C = 16, H = 16, heads = 2, ffn = 32, M = 1024, K0 = 512;
  std::mt19937_64 rng(501);
  ParamMap pm;
  std::vector<TpmLayer> layers;
  for (int t = 0; t < 4; ++t) {
    layers.emplace_back(pm, "tpm.layer" + std::to_string(t), C, H, heads, ffn, rng);
  }
  SeedPoints seeds = make_seeds(M, C, rng);
  WordFeatures words = make_words(6, H, rng);

  // P_0: a scattered half of the seeds, deliberately not the first block.
  std::vector<int64_t> pick(static_cast<size_t>(M));
  std::iota(pick.begin(), pick.end(), 0);
  std::shuffle(pick.begin(), pick.end(), rng);
  pick.resize(static_cast<size_t>(K0));
  Graph g(false);
  KeypointSet all = keypoints_from_seeds(seeds);
  KeypointSet p0 = select_keypoints(g, all, all.features, pick);

  std::vector<TpmLayerOutput> out = run_tpm(g, layers, p0, words, seeds, 0.5);
  REQUIRE(out.size() == 4);
  const std::vector<int64_t> schedule{256, 128, 64, 32};
  const KeypointSet* prev = &p0;
  for (size_t t = 0; t < out.size(); ++t) {
    CHECK(out[t].selected.count() == schedule[t]);
    CHECK(out[t].selected.stage == "tpm-layer-" + std::to_string(t + 1));
    CHECK(out[t].pooled.size() == static_cast<size_t>(prev->count()));
    CHECK(out[t].refined_points.dim(0) == prev->count());
    CHECK(out[t].refined_points.dim(1) == C);
    CHECK(out[t].words.features.dim(0) == 6);

    // Selected keypoints are a subset of the layer's input set; indices stay
    // distinct and keep their seed coordinates.
    std::set<int64_t> prev_ids(prev->seed_indices.begin(), prev->seed_indices.end());
    std::set<int64_t> ids(out[t].selected.seed_indices.begin(),
                          out[t].selected.seed_indices.end());
    CHECK(ids.size() == static_cast<size_t>(out[t].selected.count()));
    for (int64_t id : out[t].selected.seed_indices) {
      CHECK(prev_ids.count(id) == 1);
      CHECK(id >= 0);
      CHECK(id < M);
    }
    for (size_t i = 0; i < out[t].selected.coords.size(); ++i) {
      CHECK(out[t].selected.coords[i] ==
            seeds.coords[static_cast<size_t>(out[t].selected.seed_indices[i])]);
    }

    // Cross-attention rows are probability distributions over the keys.
    for (const Tensor& a : out[t].cross_attn) {
      REQUIRE(a.dim(0) == 6);
      REQUIRE(a.dim(1) == prev->count());
      auto d = a.data();
      for (int64_t r = 0; r < a.dim(0); ++r) {
        double sum = 0.0;
        for (int64_t c = 0; c < a.dim(1); ++c) sum += d[r * a.dim(1) + c];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
    prev = &out[t].selected;
  }
}

TEST_CASE("odd keypoint counts follow the ceil halving schedule 13 -> 7 -> 4 -> 2 -> 1") {
  const int64_t C = 4, H = 4, M = 32;
  std::mt19937_64 rng(502);
  ParamMap pm;
  std::vector<TpmLayer> layers;
  for (int t = 0; t < 4; ++t) {
    layers.emplace_back(pm, "tpm.layer" + std::to_string(t), C, H, 2, 8, rng);
  }
  SeedPoints seeds = make_seeds(M, C, rng);
  WordFeatures words = make_words(4, H, rng);
  Graph g(false);
  KeypointSet all = keypoints_from_seeds(seeds);
  std::vector<int64_t> pick(13);
  std::iota(pick.begin(), pick.end(), 2);
  KeypointSet p0 = select_keypoints(g, all, all.features, pick);

  std::vector<TpmLayerOutput> out = run_tpm(g, layers, p0, words, seeds, 0.5);
  const std::vector<int64_t> schedule{7, 4, 2, 1};
  REQUIRE(out.size() == 4);
  for (size_t t = 0; t < out.size(); ++t) CHECK(out[t].selected.count() == schedule[t]);

  // A fifth layer would receive a single keypoint and must refuse it.
  layers.emplace_back(pm, "tpm.layer4", C, H, 2, 8, rng);
  Graph g2(false);
  CHECK_THROWS_AS(run_tpm(g2, layers, p0, words, seeds, 0.5), ContractError);
}

TEST_CASE("selection can be disabled (every layer keeps all keypoints) and the ratio is validated") {
  const int64_t C = 4, H = 4, M = 16;
  std::mt19937_64 rng(503);
  ParamMap pm;
  std::vector<TpmLayer> layers;
  for (int t = 0; t < 3; ++t) {
    layers.emplace_back(pm, "tpm.layer" + std::to_string(t), C, H, 2, 8, rng);
  }
  SeedPoints seeds = make_seeds(M, C, rng);
  WordFeatures words = make_words(4, H, rng);
  Graph g(false);
  KeypointSet p0 = keypoints_from_seeds(seeds);

  std::vector<TpmLayerOutput> kept = run_tpm(g, layers, p0, words, seeds, 0.5, true);
  for (const auto& o : kept) CHECK(o.selected.count() == M);

  // Ratio 1 keeps everything too, via the ceil schedule itself.
  Graph g2(false);
  std::vector<TpmLayerOutput> full = run_tpm(g2, layers, p0, words, seeds, 1.0);
  for (const auto& o : full) CHECK(o.selected.count() == M);

  Graph g3(false);
  CHECK_THROWS_AS(run_tpm(g3, layers, p0, words, seeds, 0.0), ContractError);
  CHECK_THROWS_AS(run_tpm(g3, layers, p0, words, seeds, 1.25), ContractError);
}

// ========================================================================
// keypoint selection module

TEST_CASE("keypoints_from_seeds is the identity selection over all seeds") {
  std::mt19937_64 rng(601);
  SeedPoints seeds = make_seeds(6, 4, rng);
  KeypointSet all = keypoints_from_seeds(seeds);
  CHECK(all.count() == 6);
  CHECK(all.stage == "seeds");
  for (int64_t i = 0; i < 6; ++i) {
    CHECK(all.seed_indices[static_cast<size_t>(i)] == i);
    CHECK(all.coords[static_cast<size_t>(i)] == seeds.coords[static_cast<size_t>(i)]);
  }
  CHECK(all.features.storage_id() == seeds.features.storage_id());

  Graph g(false);
  CHECK_THROWS_AS(select_keypoints(g, all, all.features, {0, 6}), ContractError);
  CHECK_THROWS_AS(select_keypoints(g, all, all.features, {-1}), ContractError);
}

TEST_CASE("object confidence scores match a sigmoid MLP oracle and rank the candidates") {
  const int64_t C = 4, H = 4, hidden = 3, M = 8;
  std::mt19937_64 rng(602);
  ParamMap pm;
  Dks dks(pm, "dks", C, H, hidden, rng);
  randomize_params(pm, rng, -0.9, 0.9);
  SeedPoints seeds = make_seeds(M, C, rng);

  Graph g(false);
  Dks::Confidence conf = dks.object_confidence(g, seeds, 5);
  REQUIRE(conf.scores.rank() == 1);
  REQUIRE(conf.scores.size() == M);

  Mat expect = o_sigmoid(o_mlp2(pm, "dks.object", to_mat(seeds.features)));
  std::vector<double> flat;
  for (const auto& row : expect) {
    REQUIRE(row.size() == 1);
    flat.push_back(row[0]);
  }
  auto scores = conf.scores.data();
  for (int64_t i = 0; i < M; ++i) {
    CHECK(scores[i] == doctest::Approx(flat[static_cast<size_t>(i)]).epsilon(1e-9));
    CHECK(scores[i] > 0.0);
    CHECK(scores[i] < 1.0);
  }
  CHECK(conf.picked == o_argtopk(flat, 5));

  CHECK_THROWS_AS(dks.object_confidence(g, seeds, 0), ContractError);
  CHECK_THROWS_AS(dks.object_confidence(g, seeds, M + 1), ContractError);
}

TEST_CASE("description relevance pools words by max, concatenates, and scores each candidate") {
  const int64_t C = 4, H = 4, hidden = 3, W = 3, n = 6;
  std::mt19937_64 rng(603);
  ParamMap pm;
  Dks dks(pm, "dks", C, H, hidden, rng);
  randomize_params(pm, rng, -0.9, 0.9);
  Tensor cand = Tensor::uniform({n, C}, rng, -1.0, 1.0);
  WordFeatures words = make_words(W, H, rng);

  Graph g(false);
  Dks::Relevance rel = dks.description_relevance(g, cand, words, 3);
  REQUIRE(rel.scores.size() == n);

  Mat wm = to_mat(words.features);
  std::vector<double> pooled(static_cast<size_t>(H), -1e300);
  for (const auto& row : wm) {
    for (size_t j = 0; j < row.size(); ++j) pooled[j] = std::max(pooled[j], row[j]);
  }
  Mat joint = to_mat(cand);
  for (auto& row : joint) row.insert(row.end(), pooled.begin(), pooled.end());
  Mat expect = o_sigmoid(o_mlp2(pm, "dks.relevance", joint));
  std::vector<double> flat;
  for (const auto& row : expect) flat.push_back(row[0]);
  auto scores = rel.scores.data();
  for (int64_t i = 0; i < n; ++i) {
    CHECK(scores[i] == doctest::Approx(flat[static_cast<size_t>(i)]).epsilon(1e-9));
  }
  CHECK(rel.picked == o_argtopk(flat, 3));
}

TEST_CASE("identical candidate rows score identically and the ranking reflects the scores") {
  const int64_t C = 4, H = 4, n = 5;
  std::mt19937_64 rng(604);
  ParamMap pm;
  Dks dks(pm, "dks", C, H, 3, rng);
  Tensor one_row = Tensor::uniform({1, C}, rng, -1.0, 1.0);
  Tensor cand = Tensor::zeros({n, C});
  {
    auto d = cand.mutable_data();
    auto s = one_row.data();
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < C; ++c) d[r * C + c] = s[c];
  }
  WordFeatures words = make_words(2, H, rng);
  Graph g(false);
  Dks::Relevance rel = dks.description_relevance(g, cand, words, 3);
  // The matrix multiply may round row blocks differently, so equal inputs are
  // only guaranteed equal scores to near machine precision, and the picked
  // order must simply agree with the scores as computed.
  auto scores = rel.scores.data();
  std::vector<double> flat(scores.begin(), scores.end());
  for (int64_t i = 1; i < n; ++i) CHECK(scores[i] == doctest::Approx(scores[0]).epsilon(1e-12));
  CHECK(rel.picked == o_argtopk(flat, 3));
}

TEST_CASE("the two-step filter composes: candidates from confidence, survivors from relevance") {
  const int64_t C = 4, H = 4, M = 12, k_o = 7, k_d = 3;
  std::mt19937_64 rng(605);
  ParamMap pm;
  Dks dks(pm, "dks", C, H, 3, rng);
  randomize_params(pm, rng, -0.9, 0.9);
  SeedPoints seeds = make_seeds(M, C, rng);
  WordFeatures words = make_words(3, H, rng);

  Graph g(false);
  Dks::Result res = dks(g, seeds, words, k_o, k_d);
  REQUIRE(res.candidate_indices.size() == static_cast<size_t>(k_o));
  REQUIRE(res.p0.count() == k_d);
  REQUIRE(res.object_scores.size() == M);
  REQUIRE(res.relevance_scores.size() == k_o);
  CHECK(res.p0.stage == "dks");

  // Full two-stage oracle.
  Mat obj = o_sigmoid(o_mlp2(pm, "dks.object", to_mat(seeds.features)));
  std::vector<double> obj_flat;
  for (const auto& row : obj) obj_flat.push_back(row[0]);
  std::vector<int64_t> cand = o_argtopk(obj_flat, k_o);
  CHECK(res.candidate_indices == cand);

  Mat wm = to_mat(words.features);
  std::vector<double> pooled(static_cast<size_t>(H), -1e300);
  for (const auto& row : wm)
    for (size_t j = 0; j < row.size(); ++j) pooled[j] = std::max(pooled[j], row[j]);
  Mat joint;
  Mat seed_m = to_mat(seeds.features);
  for (int64_t c : cand) {
    std::vector<double> row = seed_m[static_cast<size_t>(c)];
    row.insert(row.end(), pooled.begin(), pooled.end());
    joint.push_back(row);
  }
  Mat relevance = o_sigmoid(o_mlp2(pm, "dks.relevance", joint));
  std::vector<double> rel_flat;
  for (const auto& row : relevance) rel_flat.push_back(row[0]);
  std::vector<int64_t> keep = o_argtopk(rel_flat, k_d);
  for (int64_t i = 0; i < k_d; ++i) {
    const int64_t expect_seed = cand[static_cast<size_t>(keep[static_cast<size_t>(i)])];
    CHECK(res.p0.seed_indices[static_cast<size_t>(i)] == expect_seed);
    CHECK(res.p0.coords[static_cast<size_t>(i)] == seeds.coords[static_cast<size_t>(expect_seed)]);
    // Features flow through two gathers untouched.
    for (int64_t c = 0; c < C; ++c) {
      CHECK(res.p0.features.at(i, c) == seeds.features.at(expect_seed, c));
    }
    for (int64_t score_i = 0; score_i < M; ++score_i) {
      CHECK(res.object_scores.data()[score_i] ==
            doctest::Approx(obj_flat[static_cast<size_t>(score_i)]).epsilon(1e-9));
    }
  }

  // Nesting invariants: P_0 within candidates within the seed id range.
  std::set<int64_t> cand_set(res.candidate_indices.begin(), res.candidate_indices.end());
  CHECK(cand_set.size() == static_cast<size_t>(k_o));
  for (int64_t id : res.p0.seed_indices) CHECK(cand_set.count(id) == 1);
  for (int64_t id : cand_set) {
    CHECK(id >= 0);
    CHECK(id < M);
  }

  CHECK_THROWS_AS(dks(g, seeds, words, M + 1, 1), ContractError);
  CHECK_THROWS_AS(dks(g, seeds, words, k_o, k_o + 1), ContractError);
}

TEST_CASE("keypoint filter gradients flow through both score heads") {
  const int64_t C = 4, H = 4, M = 6;
  std::mt19937_64 rng(606);
  ParamMap pm;
  Dks dks(pm, "dks", C, H, 3, rng);
  SeedPoints seeds = make_seeds(M, C, rng);
  WordFeatures words = make_words(3, H, rng);

  // Keep the rankings robust to the finite-difference nudges.
  {
    Graph g(false);
    Dks::Result probe = dks(g, seeds, words, 4, 2);
    std::vector<double> s(probe.object_scores.data().begin(), probe.object_scores.data().end());
    std::sort(s.begin(), s.end());
    for (size_t i = 1; i < s.size(); ++i) REQUIRE(s[i] - s[i - 1] > 1e-4);
    std::vector<double> r(probe.relevance_scores.data().begin(),
                          probe.relevance_scores.data().end());
    std::sort(r.begin(), r.end());
    for (size_t i = 1; i < r.size(); ++i) REQUIRE(r[i] - r[i - 1] > 1e-4);
  }

  Tensor read_o = Tensor::uniform({M}, rng, 0.5, 1.5);
  Tensor read_r = Tensor::uniform({4}, rng, 0.5, 1.5);
  auto result = finite_diff_check(
      [&](Graph& g) {
        Dks::Result res = dks(g, seeds, words, 4, 2);
        Tensor loss = mean_all(g, mul(g, res.object_scores, read_o));
        return add(g, loss, mean_all(g, mul(g, res.relevance_scores, read_r)));
      },
      all_params(pm));
  CAPTURE(result.worst);
  CHECK(result.max_rel_err < 1e-4);
}
