#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <future>
#include <set>
#include <thread>

#include "ssvep/evaluation.hpp"
#include "ssvep/signal.hpp"
#include "ssvep/stream.hpp"

using namespace ssvep;
using namespace ssvep::stream;

namespace {

struct StreamFixture {
  std::filesystem::path dir;
  DatasetManifest manifest;
  fuzzy::FuzzyModel model;
  double fs = 500.0;
  double window_s = 2.5;

  StreamFixture() {
    dir = std::filesystem::temp_directory_path() / "ssvep_stream_tests";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    manifest.fs_hz = fs;
    manifest.table.entries = {{7.0, 0.0, 0}, {8.0, 0.0, 1}, {9.0, 0.0, 2}};

    std::uint32_t trial_id = 0;
    std::vector<fuzzy::Sample> samples;
    for (int cls = 0; cls < 3; ++cls)
      for (std::uint32_t k = 0; k < 2; ++k) {
        Epoch e = generate_ssvep(manifest.table.entries[cls], {1.0, 0.5}, fs, window_s, 2, 0.2,
                                 {1.0, 0.9}, 900 + trial_id, trial_id);
        const auto p = dir / ("t" + std::to_string(trial_id) + ".ssvep");
        write_epoch_file(e, p);
        manifest.trials.push_back({p, cls, trial_id});
        ++trial_id;
        samples.emplace_back(fuzzy::fft_features(read_epoch_file(p), 6.0, 64.0, 0.25), cls);
      }

    fuzzy::TrainConfig tc;
    tc.rules = 3;
    tc.dim_query = 8;
    tc.dim_value = 8;
    tc.dim_hidden = 16;
    tc.batch_size = samples.size();
    tc.epochs_max = 20;
    tc.seed = 4;
    model = fuzzy::train(samples, 3, tc, Exec::serial);
  }
};

}  // namespace

TEST_CASE("feedback messages round-trip through their wire form") {
  const FeedbackMsg m{42, 3, 0.9876, 12.34};
  const FeedbackMsg r = parse_feedback(encode_feedback(m));
  CHECK(r.trial_id == 42);
  CHECK(r.class_index == 3);
  CHECK(r.confidence == doctest::Approx(0.9876));
  CHECK(r.inference_ms == doctest::Approx(12.34));
  CHECK_THROWS(parse_feedback("GARBAGE 1 2\n"));
}

TEST_CASE("frame encoding is byte-exact") {
  StreamFrame f;
  f.trial_id = 7;
  f.chunk_index = 3;
  f.n_channels = 2;
  f.payload = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};  // 3 samples x 2 channels
  const std::string wire = encode_frame(f);
  CHECK(wire.size() == 4 + 12 + 4 * 6);
  // length prefix counts everything after itself
  const auto len = static_cast<std::size_t>(static_cast<unsigned char>(wire[0])) |
                   (static_cast<std::size_t>(static_cast<unsigned char>(wire[1])) << 8);
  CHECK(len == wire.size() - 4);
}

TEST_CASE("streamed trials decode bit-exactly like the offline path") {
  StreamFixture fx;

  ServiceConfig scfg;
  scfg.window_s = fx.window_s;
  scfg.fs_hz = fx.fs;
  std::promise<std::uint16_t> tcp_port, udp_port;
  scfg.on_listening = [&](std::uint16_t p) { tcp_port.set_value(p); };

  ListenerResult listened;
  std::thread listener([&] {
    listened = feedback_listener(0, fx.manifest.trials, 30.0,
                                 [&](std::uint16_t p) { udp_port.set_value(p); });
  });
  scfg.feedback_port = udp_port.get_future().get();

  ServiceStats stats;
  std::thread service([&] { stats = decode_service(fx.model, fx.manifest.table, scfg); });
  const std::uint16_t port = tcp_port.get_future().get();

  const ProducerStats sent = stream_producer(fx.manifest, "127.0.0.1", port, 40, false);
  service.join();
  listener.join();

  // 2.5 s at 500 Hz in 40 ms chunks: 62 full frames + 1 partial per trial
  CHECK(sent.frames_sent == 63 * fx.manifest.trials.size());
  CHECK(stats.frames_received == sent.frames_sent);
  CHECK(stats.frames_malformed == 0);
  CHECK(stats.trials_decoded == fx.manifest.trials.size());

  // per-frame wire size: 4 length + 12 header + payload
  std::size_t want_bytes = 0;
  for (std::size_t t = 0; t < fx.manifest.trials.size(); ++t) {
    want_bytes += 62 * (16 + 4 * 2 * 20);  // full 20-sample chunks
    want_bytes += 16 + 4 * 2 * 10;         // final partial chunk of 10 samples
  }
  CHECK(sent.bytes_sent == want_bytes);

  // offline predictions on the same stored windows, same model
  for (const FeedbackMsg& msg : stats.sent) {
    const Epoch stored = read_epoch_file(fx.manifest.trials[msg.trial_id].path);
    const Epoch win = eval::first_window(stored, fx.window_s);
    const auto offline = fuzzy::predict(fx.model, fuzzy::fft_features(win, 6.0, 64.0, 0.25));
    CHECK(msg.class_index == offline.class_index);
    CHECK(msg.confidence == doctest::Approx(offline.confidence).epsilon(1e-12));
  }

  CHECK(listened.received.size() == fx.manifest.trials.size());
  CHECK(listened.missing == 0);
}

TEST_CASE("interleaved trials produce one feedback each") {
  StreamFixture fx;

  // hand-interleave chunks of two trials over a raw socket
  ServiceConfig scfg;
  scfg.window_s = fx.window_s;
  scfg.fs_hz = fx.fs;
  std::promise<std::uint16_t> tcp_port;
  scfg.on_listening = [&](std::uint16_t p) { tcp_port.set_value(p); };
  scfg.feedback_port = 1;  // nobody listens; sendto just fires into the void

  ServiceStats stats;
  std::thread service([&] { stats = decode_service(fx.model, fx.manifest.table, scfg); });
  const std::uint16_t port = tcp_port.get_future().get();

  const Epoch e0 = read_epoch_file(fx.manifest.trials[0].path);
  const Epoch e1 = read_epoch_file(fx.manifest.trials[1].path);

  // the producer sends trials back to back, so interleave frames by hand
  const std::size_t chunk = 20;
  std::vector<StreamFrame> frames;
  for (const Epoch* e : {&e0, &e1}) {
    std::uint32_t ci = 0;
    for (std::size_t s = 0; s < e->n_samples(); s += chunk) {
      const std::size_t len = std::min(chunk, e->n_samples() - s);
      StreamFrame f;
      f.trial_id = e->trial_id;
      f.chunk_index = ci++;
      f.n_channels = 2;
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < len; ++i)
          f.payload.push_back(static_cast<float>(e->data(c, s + i)));
      frames.push_back(std::move(f));
    }
  }
  // alternate trial 0 / trial 1 frames
  std::vector<StreamFrame> order;
  const std::size_t half = frames.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    order.push_back(frames[i]);
    order.push_back(frames[half + i]);
  }

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  for (const auto& f : order) {
    const std::string wire = encode_frame(f);
    REQUIRE(::send(fd, wire.data(), wire.size(), 0) == static_cast<ssize_t>(wire.size()));
  }
  ::close(fd);
  service.join();

  CHECK(stats.trials_decoded == 2);
  std::set<std::uint32_t> ids;
  for (const auto& m : stats.sent) ids.insert(m.trial_id);
  CHECK(ids == std::set<std::uint32_t>{e0.trial_id, e1.trial_id});
}
