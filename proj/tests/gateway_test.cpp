// Copyright 2026 The privrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <future>

#include "privrec/gateway/chat.hpp"
#include "privrec/gateway/parse.hpp"
#include "privrec/gateway/prompts.hpp"
#include "privrec/retrieval/vector_index.hpp"
#include "support.hpp"

namespace privrec::gateway {
namespace {

std::vector<ProductText> texts(std::size_t n, const std::string& stem = "item") {
  std::vector<ProductText> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({stem + " number " + std::to_string(i + 1)});
  return out;
}

TEST(Prompts, ServerTemplateSubstitutesCountAndHistory) {
  const auto h = texts(15);
  const auto p = render_prompt(server_recommendation_template(), 7, h);
  EXPECT_NE(p.user.find("recommend 7 product descriptions"), std::string::npos);
  for (std::size_t i = 0; i < h.size(); ++i) {
    EXPECT_NE(p.user.find(std::to_string(i + 1) + ". " + h[i].text + ""), std::string::npos);
  }
  EXPECT_EQ(p.user.find("{count}"), std::string::npos);
  EXPECT_EQ(p.user.find("{history}"), std::string::npos);
  EXPECT_EQ(p.system, kRecommenderRole);
}

TEST(Prompts, LocalTemplateWording) {
  const auto p = render_prompt(local_recommendation_template(), 3, texts(4));
  EXPECT_NE(p.user.find("suggest only 3 other products"), std::string::npos);
}

TEST(Prompts, ServerTemplateKeepsTheThreeConstraints) {
  const auto& t = server_recommendation_template().user_text_template;
  EXPECT_NE(t.find("1. The proportion of product categories in the recommendations matches"),
            std::string::npos);
  EXPECT_NE(t.find("2. All categories present"), std::string::npos);
  EXPECT_NE(t.find("3. The output consists of a numbered list"), std::string::npos);
}

TEST(Prompts, RenderingIsByteDeterministic) {
  const auto h = texts(9);
  const auto a = render_prompt(server_recommendation_template(), 5, h);
  const auto b = render_prompt(server_recommendation_template(), 5, h);
  EXPECT_EQ(a.user, b.user);
  EXPECT_EQ(a.system, b.system);
}

TEST(Prompts, InjectiveInCount) {
  const auto h = texts(6);
  for (const auto* t : {&server_recommendation_template(), &local_recommendation_template()}) {
    std::set<std::string> seen;
    for (std::size_t c = 1; c <= 50; ++c) seen.insert(render_prompt(*t, c, h).user);
    EXPECT_EQ(seen.size(), 50u);
  }
}

TEST(Prompts, PlaceholderInsideProductTextIsNotExpanded) {
  const std::vector<ProductText> h = {{"Mug with {count} and {history} printed"}};
  const auto p = render_prompt(server_recommendation_template(), 4, h);
  EXPECT_NE(p.user.find("Mug with {count} and {history} printed"), std::string::npos);
}

TEST(Prompts, ResidualPlaceholderIsTemplateError) {
  const PromptTemplate bad{"bad", "", "recommend {count} for {user_name}:\n{history}"};
  try {
    render_prompt(bad, 2, texts(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTemplate);
  }
}

TEST(Prompts, LabelAndScorePromptsEndWithTheProductSlot) {
  EXPECT_TRUE(std::string_view(kSensitivityLabelPrompt).ends_with("**Here is the product to classify:**"));
  EXPECT_TRUE(std::string_view(kSensitivityScorePrompt).ends_with("**Here is the product to score:**"));
  EXPECT_NE(std::string_view(kSensitivityLabelPrompt).find("Write only the label."), std::string::npos);
  EXPECT_NE(std::string_view(kSensitivityScorePrompt).find("Write only the score."), std::string::npos);
}

TEST(Parser, SimpleList) {
  const auto r = parse_numbered_list("1. Yoga mat\n2. Water bottle", 2);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0], (RecommendationEntry{1, "Yoga mat"}));
  EXPECT_EQ(r.entries[1], (RecommendationEntry{2, "Water bottle"}));
  EXPECT_EQ(r.shortfall, 0u);
}

TEST(Parser, MixedSeparatorsAndNoise) {
  const auto r = parse_numbered_list("1) A\n 2: B\nnoise\n3. C", 3);
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.entries[0].text, "A");
  EXPECT_EQ(r.entries[1].text, "B");
  EXPECT_EQ(r.entries[2].text, "C");
}

TEST(Parser, NothingNumberedIsParseErrorCarryingRaw) {
  try {
    parse_numbered_list("no numbers here", 1);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.raw(), "no numbers here");
  }
}

TEST(Parser, RanksBecomeContiguous) {
  const auto r = parse_numbered_list("3. x\n7. y\n9. z", 3);
  ASSERT_EQ(r.entries.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.entries[i].rank, i + 1);
}

TEST(Parser, ShortfallIsReportedNotFilled) {
  const auto r = parse_numbered_list("Here you go:\n1. only one\r\n", 4);
  EXPECT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.shortfall, 3u);
  EXPECT_EQ(r.entries[0].text, "only one");
}

TEST(Parser, ExtraEntriesAreKept) {
  const auto r = parse_numbered_list("1. a\n2. b\n3. c", 2);
  EXPECT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.shortfall, 0u);
}

TEST(Parser, RoundTripOverRandomTexts) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> printable(32, 126), len(1, 60), count(1, 25);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> list(count(rng));
    for (auto& t : list) {
      const int n = len(rng);
      while (static_cast<int>(t.size()) < n) {
        const char c = static_cast<char>(printable(rng));
        if (t.empty() && (std::isdigit(static_cast<unsigned char>(c)) || c == ' ')) continue;
        t.push_back(c);
      }
      while (t.back() == ' ') t.back() = 'x';
    }
    const auto parsed = parse_numbered_list(format_numbered_list(list), list.size());
    ASSERT_EQ(parsed.entries.size(), list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_EQ(parsed.entries[i].text, list[i]);
      EXPECT_EQ(parsed.entries[i].rank, i + 1);
    }
  }
}

TEST(LabelParser, AcceptsTheClosedVocabulary) {
  EXPECT_TRUE(parse_sensitivity_label("\"sensitive\""));
  EXPECT_TRUE(parse_sensitivity_label("  Sensitive\n"));
  EXPECT_FALSE(parse_sensitivity_label("NONSENSITIVE"));
  EXPECT_THROW(parse_sensitivity_label("maybe"), ParseError);
  EXPECT_THROW(parse_sensitivity_label("non-sensitive"), ParseError);
  EXPECT_THROW(parse_sensitivity_label("sensitive."), ParseError);
}

TEST(ScoreParser, AcceptsOneDecimalInRange) {
  EXPECT_DOUBLE_EQ(parse_sensitivity_score("0.3"), 0.3);
  EXPECT_DOUBLE_EQ(parse_sensitivity_score(" 1.0 "), 1.0);
  EXPECT_DOUBLE_EQ(parse_sensitivity_score("0"), 0.0);
  EXPECT_THROW(parse_sensitivity_score("1.5"), ParseError);
  EXPECT_THROW(parse_sensitivity_score("-0.2"), ParseError);
  EXPECT_THROW(parse_sensitivity_score("0.3 (health related)"), ParseError);
  EXPECT_THROW(parse_sensitivity_score("high"), ParseError);
}

TEST(LlmAnnotation, ScriptedLabelAndScore) {
  ScriptedChatClient label("\"sensitive\"");
  EXPECT_TRUE(assign_label_via_llm(label, {"Blood glucose strips"}));
  ScriptedChatClient score("0.3");
  EXPECT_DOUBLE_EQ(assign_score_via_llm(score, {"Fragrance-free laundry detergent"}), 0.3);
  ScriptedChatClient vague("maybe");
  EXPECT_THROW(assign_label_via_llm(vague, {"x"}), ParseError);
}

TEST(LlmAnnotation, PromptIsTheVerbatimAssetPlusProduct) {
  auto rec = std::make_shared<RecordingChatClient>(std::make_shared<ScriptedChatClient>("0.0"));
  assign_score_via_llm(*rec, {"Title: Hand lotion"});
  const auto reqs = rec->requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].user, std::string(kSensitivityScorePrompt) + "\nTitle: Hand lotion");
}

TEST(ScriptedClient, ReplaysFixture) {
  ScriptedChatClient c("1. A\n2. B");
  const auto r = c.complete("sys", "user");
  EXPECT_EQ(r.text, "1. A\n2. B");
  EXPECT_GE(r.latency_seconds, 0.0);
}

TEST(ScriptedClient, InjectedFailureIsTransport) {
  ScriptedChatClient c("1. A", 0.0, "poison");
  EXPECT_NO_THROW(c.complete("", "fine"));
  try {
    c.complete("", "a poison pill");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTransport);
  }
}

TEST(ScriptedClient, DelayIsMeasured) {
  ScriptedChatClient c("1. A", 0.05);
  EXPECT_GE(c.complete("", "").latency_seconds, 0.05);
}

TEST(BackendConfig, RejectsInlineTokens) {
  try {
    backend_config_from_json({{"kind", "remote_api"}, {"base_url", "http://x"}, {"auth_token", "s"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  EXPECT_THROW(backend_config_from_json({{"kind", "remote_api"}}), Error);
  EXPECT_THROW(backend_config_from_json({{"kind", "carrier_pigeon"}}), Error);
}

TEST(BackendConfig, IdentityHasNoSecrets) {
  const auto c = backend_config_from_json(
      {{"kind", "remote_api"}, {"base_url", "http://h:1"}, {"model", "m"}, {"auth_token_env", "TOK"}});
  const auto id = backend_identity(c).dump();
  EXPECT_EQ(id.find("TOK"), std::string::npos);
  EXPECT_NE(id.find("http://h:1"), std::string::npos);
}

class ChatStub : public ::testing::Test {
 protected:
  ChatBackendConfig config(const std::string& env = {}) {
    ChatBackendConfig c;
    c.kind = BackendKind::kRemoteApi;
    c.base_url = stub_.url();
    c.model_name = "stub-model";
    c.auth_token_env = env;
    c.timeout_seconds = 5.0;
    return c;
  }
  test::StubServer stub_;
};

TEST_F(ChatStub, CannedBodyIsReturned) {
  nlohmann::json seen;
  stub_.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"1. Yoga mat"}}]})",
                    "application/json");
  });
  stub_.start();
  HttpChatClient client(config());
  const auto r = client.complete("role line", "the prompt");
  EXPECT_EQ(r.text, "1. Yoga mat");
  EXPECT_EQ(seen["model"], "stub-model");
  ASSERT_EQ(seen["messages"].size(), 2u);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][0]["content"], "role line");
  EXPECT_EQ(seen["messages"][1]["role"], "user");
  EXPECT_EQ(seen["messages"][1]["content"], "the prompt");
  EXPECT_EQ(seen["temperature"], 0.0);
}

TEST_F(ChatStub, BasePathPrefixIsHonoured) {
  stub_.server().Post("/proxy/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
  });
  stub_.start();
  auto c = config();
  c.base_url += "/proxy";
  EXPECT_EQ(HttpChatClient(c).complete("", "x").text, "ok");
}

TEST_F(ChatStub, Non2xxIsProtocolError) {
  stub_.server().Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
  });
  stub_.start();
  try {
    HttpChatClient(config()).complete("", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProtocol);
    EXPECT_FALSE(e.retry_safe());
  }
}

TEST_F(ChatStub, EmptyChoicesIsEmptyError) {
  stub_.server().Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[]})", "application/json");
  });
  stub_.start();
  try {
    HttpChatClient(config()).complete("", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyResponse);
  }
}

TEST_F(ChatStub, MalformedBodyIsProtocolError) {
  stub_.server().Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "text/html");
  });
  stub_.start();
  try {
    HttpChatClient(config()).complete("", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProtocol);
  }
}

TEST_F(ChatStub, TimeoutIsTransportError) {
  stub_.server().Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content(R"({"choices":[{"message":{"content":"late"}}]})", "application/json");
  });
  stub_.start();
  auto c = config();
  c.timeout_seconds = 0.2;
  try {
    HttpChatClient(c).complete("", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTransport);
    EXPECT_TRUE(e.retry_safe());
  }
}

TEST_F(ChatStub, TokenIsSentButNeverSurfaced) {
  const std::string secret = "tok-" + std::to_string(std::random_device{}());
  ::setenv("PRIVREC_TEST_CHAT_TOKEN", secret.c_str(), 1);
  std::string auth;
  stub_.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.status = 500;
  });
  stub_.start();
  HttpChatClient client(config("PRIVREC_TEST_CHAT_TOKEN"));
  std::string message;
  try {
    client.complete("", "x");
  } catch (const Error& e) {
    message = e.what();
  }
  ::unsetenv("PRIVREC_TEST_CHAT_TOKEN");
  EXPECT_EQ(auth, "Bearer " + secret);
  EXPECT_FALSE(message.empty());
  EXPECT_EQ(message.find(secret), std::string::npos);
  EXPECT_EQ(client.identity().find(secret), std::string::npos);
  EXPECT_EQ(backend_identity(config("PRIVREC_TEST_CHAT_TOKEN")).dump().find(secret), std::string::npos);
}

TEST_F(ChatStub, ConcurrentCompletionsAreIsolated) {
  stub_.server().Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["choices"] = {{{"message", {{"content", body["messages"].back()["content"]}}}}};
    res.set_content(out.dump(), "application/json");
  });
  stub_.start();
  auto client = std::make_shared<HttpChatClient>(config());
  std::vector<std::future<std::string>> futures;
  for (int i = 0; i < 8; ++i) {
    futures.push_back(std::async(std::launch::async, [client, i] {
      return client->complete("", "req-" + std::to_string(i)).text;
    }));
  }
  for (int i = 0; i < 8; ++i) EXPECT_EQ(futures[i].get(), "req-" + std::to_string(i));
}

class RetrievalBackend : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(5);
    catalog_ = std::make_shared<Catalog>(test::random_catalog(rng, 6));
    provider_ = std::make_shared<retrieval::HashEmbeddingProvider>(64);
    index_ = std::make_shared<retrieval::VectorIndex>(retrieval::build_index(*catalog_, *provider_));
  }
  std::vector<ProductText> history(std::initializer_list<std::size_t> positions) const {
    std::vector<ProductText> out;
    for (auto i : positions) out.push_back(canonical_text(catalog_->products()[i]));
    return out;
  }
  std::shared_ptr<Catalog> catalog_;
  std::shared_ptr<retrieval::HashEmbeddingProvider> provider_;
  std::shared_ptr<retrieval::VectorIndex> index_;
};

TEST_F(RetrievalBackend, ReturnsTheRequestedCountOfUnseenCatalogTexts) {
  RetrievalChatClient client(catalog_, index_, provider_, false);
  const auto h = history({0, 7, 13});
  const auto p = render_prompt(server_recommendation_template(), 5, h);
  const auto parsed = parse_numbered_list(client.complete(p.system, p.user).text, 5);
  ASSERT_EQ(parsed.entries.size(), 5u);
  std::set<std::string> seen;
  for (const auto& e : parsed.entries) {
    const auto top = index_->nearest(provider_->embed_one(e.text), 1).front();
    EXPECT_NEAR(top.similarity, 1.0, 1e-12);
    EXPECT_TRUE(seen.insert(top.product_id).second);
    for (const auto& x : h) EXPECT_NE(e.text, x.text);
  }
}

TEST_F(RetrievalBackend, SameCategoryStaysInSourceCategories) {
  RetrievalChatClient client(catalog_, index_, provider_, true);
  const auto h = history({2, 20});
  std::set<std::string> cats = {catalog_->products()[2].main_category,
                                catalog_->products()[20].main_category};
  const auto p = render_prompt(local_recommendation_template(), 6, h);
  const auto parsed = parse_numbered_list(client.complete(p.system, p.user).text, 6);
  EXPECT_EQ(parsed.entries.size(), 6u);
  for (const auto& e : parsed.entries) {
    const auto top = index_->nearest(provider_->embed_one(e.text), 1).front();
    EXPECT_TRUE(cats.contains(top.main_category)) << top.main_category;
  }
}

TEST_F(RetrievalBackend, DeterministicAcrossCalls) {
  RetrievalChatClient client(catalog_, index_, provider_, true);
  const auto p = render_prompt(server_recommendation_template(), 10, history({1, 4, 9, 30}));
  EXPECT_EQ(client.complete(p.system, p.user).text, client.complete(p.system, p.user).text);
}

TEST_F(RetrievalBackend, FactoryNeedsContext) {
  ChatBackendConfig c;
  c.kind = BackendKind::kMockRetrieval;
  EXPECT_THROW(make_chat_client(c), Error);
  EXPECT_NE(make_chat_client(c, {catalog_, index_, provider_}), nullptr);
}

}  // namespace
}  // namespace privrec::gateway
