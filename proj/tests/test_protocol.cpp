#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include "freqsift/builtin.hpp"
#include "freqsift/external.hpp"
#include "freqsift/protocol.hpp"
#include "freqsift/registry.hpp"
#include "test_util.hpp"

using namespace freqsift;
using namespace std::chrono_literals;
using freqsift::testing::tone;

namespace {

std::string fake(const std::string& mode = "normal") {
  return std::string("stdio:") + FAKE_ORACLE + " --mode " + mode;
}

BandEnergyClassifier reference() {
  return BandEnergyClassifier("ref", {"low", "mid", "high"}, 16000, {0, 2000, 4000, 8000});
}

std::vector<Signal> probe_signals() {
  return {tone(1000, 0.5, 2048, 16000), tone(3000, 0.5, 2048, 16000), tone(6000, 0.5, 2048, 16000),
          tone(2500, 0.4, 2048, 16000)};
}

}  // namespace

TEST(Base64, RoundTripAndRfcVectors) {
  const std::string text = "foobar";
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  EXPECT_EQ(protocol::base64_encode(std::span(bytes).first(0)), "");
  EXPECT_EQ(protocol::base64_encode(std::span(bytes).first(1)), "Zg==");
  EXPECT_EQ(protocol::base64_encode(std::span(bytes).first(2)), "Zm8=");
  EXPECT_EQ(protocol::base64_encode(bytes), "Zm9vYmFy");
  EXPECT_EQ(protocol::base64_decode("Zm9vYmE="), std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1));
  EXPECT_THROW(protocol::base64_decode("Zm9v!!"), Error);
}

TEST(Protocol, SamplesAreLittleEndianFloat32) {
  const std::vector<double> x{1.0, -0.5, 0.25};
  const auto b64 = protocol::encode_samples(x);
  const auto raw = protocol::base64_decode(b64);
  ASSERT_EQ(raw.size(), 12u);
  // 1.0f = 0x3f800000
  EXPECT_EQ(raw[0], 0x00);
  EXPECT_EQ(raw[3], 0x3f);
  const auto back = protocol::decode_samples(b64);
  EXPECT_EQ(back, (std::vector<float>{1.0f, -0.5f, 0.25f}));
}

TEST(Protocol, MessagesRoundTrip) {
  const protocol::Handshake h{3, {"a", "b", "c"}, 16000};
  const auto hp = protocol::parse_handshake(protocol::encode_handshake(h));
  EXPECT_EQ(hp.labels, h.labels);
  EXPECT_EQ(hp.sample_rate, 16000);

  const Signal s({0.1, 0.2, -0.3}, 8000);
  const auto req = protocol::parse_request(protocol::encode_request("r7", s));
  EXPECT_EQ(req.id, "r7");
  EXPECT_EQ(req.sample_rate, 8000);
  EXPECT_EQ(req.samples.size(), 3u);

  const std::vector<double> probs{0.2, 0.3, 0.5};
  const auto resp = protocol::parse_response(protocol::encode_response("r7", probs));
  EXPECT_EQ(resp.id, "r7");
  const auto d = protocol::to_distribution(resp, h.labels);
  EXPECT_DOUBLE_EQ(d[2], 0.5);

  const auto err = protocol::parse_response(protocol::encode_error("r8", "boom"));
  ASSERT_TRUE(err.error);
  try {
    protocol::to_distribution(err, h.labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BackendError);
  }
}

TEST(Protocol, HandshakeValidation) {
  EXPECT_THROW(protocol::parse_handshake(R"({"protocol":"other/1","n_classes":2,"labels":["a","b"],"sample_rate":8000})"), Error);
  EXPECT_THROW(protocol::parse_handshake(R"({"protocol":"freqsift-oracle/1","n_classes":3,"labels":["a","b"],"sample_rate":8000})"), Error);
  EXPECT_THROW(protocol::parse_handshake("garbage"), Error);
}

TEST(Protocol, Renormalization) {
  const std::vector<std::string> labels{"a", "b"};
  auto near = protocol::parse_response(R"({"id":"x","probs":[0.50004,0.50004]})");
  const auto d = protocol::to_distribution(near, labels);
  EXPECT_NEAR(d[0] + d[1], 1.0, 1e-12);

  const std::string raw = R"({"id":"x","probs":[0.3,0.3]})";
  try {
    protocol::to_distribution(protocol::parse_response(raw), labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BackendError);
    EXPECT_EQ(e.payload(), raw);
  }
  EXPECT_THROW(protocol::to_distribution(protocol::parse_response(R"({"id":"x","probs":[1.0]})"), labels), Error);
  EXPECT_THROW(protocol::to_distribution(protocol::parse_response(R"({"id":"x","probs":[0.5,0.5],"labels":["b","a"]})"), labels), Error);
  EXPECT_THROW(protocol::parse_response(R"({"probs":[0.5,0.5]})"), Error);
}

TEST(External, StdioMatchesBuiltin) {
  const auto ext = ExternalClassifier::connect("ext", fake());
  const auto ref = reference();
  EXPECT_EQ(ext->labels(), ref.labels());
  EXPECT_EQ(ext->sample_rate(), 16000);
  const auto signals = probe_signals();
  const auto out = classify_batch(*ext, signals);
  ASSERT_EQ(out.size(), signals.size());
  for (std::size_t i = 0; i < signals.size(); ++i) {
    // Float32 transport: compare with the builtin on the same rounded samples.
    std::vector<double> rounded;
    for (double v : signals[i].samples()) rounded.push_back(static_cast<float>(v));
    const auto expected = classify(ref, Signal(rounded, 16000));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(out[i].value()[k], expected[k], 1e-9);
  }
  EXPECT_EQ(top1(classify(*ext, signals[0])), 0u);
}

TEST(External, ResponsesMatchedById) {
  const auto ext = ExternalClassifier::connect("ext", fake("reverse"));
  const auto signals = probe_signals();
  const auto out = classify_batch(*ext, signals);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(top1(out[i].value()), i);
}

TEST(External, StaleIdsIgnored) {
  const auto ext = ExternalClassifier::connect("ext", fake("stale"));
  const auto out = classify_batch(*ext, probe_signals());
  EXPECT_EQ(top1(out[2].value()), 2u);
}

TEST(External, PerElementErrors) {
  const auto ext = ExternalClassifier::connect("ext", fake("error-odd"));
  const auto out = classify_batch(*ext, probe_signals());
  EXPECT_TRUE(out[0].ok());
  EXPECT_FALSE(out[1].ok());
  EXPECT_TRUE(out[2].ok());
  EXPECT_FALSE(out[3].ok());
  EXPECT_EQ(out[1].error()->kind(), ErrorKind::BackendError);
}

TEST(External, UnnormalizedIsBackendErrorNearIsAccepted) {
  const auto bad = ExternalClassifier::connect("ext", fake("unnormalized"));
  try {
    classify(*bad, probe_signals()[0]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BackendError);
    EXPECT_FALSE(e.payload().empty());
  }
  const auto near = ExternalClassifier::connect("ext", fake("near-normalized"));
  const auto d = classify(*near, probe_signals()[0]);
  EXPECT_NEAR(d[0] + d[1] + d[2], 1.0, 1e-12);
}

TEST(External, MalformedAndTimeoutAndClose) {
  const auto malformed = ExternalClassifier::connect("ext", fake("malformed"));
  EXPECT_THROW(classify(*malformed, probe_signals()[0]), Error);

  ExternalOptions quick;
  quick.timeout = 300ms;
  const auto silent = ExternalClassifier::connect("ext", fake("silent"), quick);
  EXPECT_THROW(classify(*silent, probe_signals()[0]), Error);

  const auto once = ExternalClassifier::connect("ext", fake("exit-after-1"));
  EXPECT_NO_THROW(classify(*once, probe_signals()[0]));
  const auto out = classify_batch(*once, probe_signals());
  for (const auto& o : out) EXPECT_FALSE(o.ok());
}

TEST(External, HandshakeFailures) {
  for (const char* mode : {"no-handshake", "bad-handshake"}) {
    try {
      ExternalClassifier::connect("ext", fake(mode));
      FAIL() << mode;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::BackendError) << mode;
    }
  }
}

TEST(External, WrongRateIsRejectedLocally) {
  const auto ext = ExternalClassifier::connect("ext", fake());
  EXPECT_THROW(classify(*ext, tone(1000, 0.5, 512, 8000)), Error);
  // The connection is still usable afterwards.
  EXPECT_EQ(top1(classify(*ext, probe_signals()[1])), 1u);
}

TEST(External, Tcp) {
  const auto dir = freqsift::testing::temp_dir("tcp");
  const auto port_file = dir / "port";
  const std::string cmd = std::string(FAKE_ORACLE) + " --tcp " + port_file.string() + " &";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  int port = 0;
  for (int i = 0; i < 100 && port == 0; ++i) {
    std::ifstream in(port_file);
    if (!(in >> port)) {
      port = 0;
      std::this_thread::sleep_for(20ms);
    }
  }
  ASSERT_GT(port, 0);
  const auto ext = parse_oracle_spec("tcp:127.0.0.1:" + std::to_string(port), 16000);
  const auto out = classify_batch(*ext, probe_signals());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(top1(out[i].value()), i);
}

TEST(External, UnreachableTcp) {
  try {
    ExternalClassifier::connect("x", "tcp:127.0.0.1:1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BackendError);
  }
  EXPECT_THROW(ExternalClassifier::connect("x", "tcp:nowhere"), Error);
}
