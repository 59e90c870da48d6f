#include "ssvep/stream.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ssvep/evaluation.hpp"
#include "ssvep/log.hpp"

namespace ssvep::stream {

namespace {

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd(o.fd) { o.fd = -1; }
  ~Fd() {
    if (fd >= 0) ::close(fd);
  }
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("bad IPv4 address: " + host);
  return addr;
}

void send_all(int fd, const char* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n <= 0) throw std::runtime_error("socket send failed");
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

// false on clean EOF at a frame boundary
bool recv_exact(int fd, char* data, std::size_t len, bool eof_ok) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n == 0) {
      if (eof_ok && got == 0) return false;
      throw std::runtime_error("connection closed mid-frame");
    }
    if (n < 0) throw std::runtime_error("socket recv failed");
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}
std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}
std::uint16_t get_u16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                    (static_cast<unsigned char>(p[1]) << 8));
}

struct BoundedQueue {
  std::mutex mu;
  std::condition_variable not_full, not_empty;
  std::deque<StreamFrame> q;
  std::size_t capacity;
  bool closed = false;

  explicit BoundedQueue(std::size_t cap) : capacity(cap) {}

  void push(StreamFrame f) {
    std::unique_lock lk(mu);
    not_full.wait(lk, [&] { return q.size() < capacity; });
    q.push_back(std::move(f));
    not_empty.notify_one();
  }
  void close() {
    std::lock_guard lk(mu);
    closed = true;
    not_empty.notify_all();
  }
  bool pop(StreamFrame& out) {
    std::unique_lock lk(mu);
    not_empty.wait(lk, [&] { return !q.empty() || closed; });
    if (q.empty()) return false;
    out = std::move(q.front());
    q.pop_front();
    not_full.notify_one();
    return true;
  }
};

}  // namespace

std::string encode_frame(const StreamFrame& f) {
  const auto n_samples = static_cast<std::uint16_t>(f.payload.size() / f.n_channels);
  std::string body;
  put_u32(body, f.trial_id);
  put_u32(body, f.chunk_index);
  put_u16(body, f.n_channels);
  put_u16(body, n_samples);
  for (float v : f.payload) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(body, bits);
  }
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  return out;
}

std::string encode_feedback(const FeedbackMsg& m) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "RESULT %u %d %.4f %.2f\n", m.trial_id, m.class_index,
                m.confidence, m.inference_ms);
  return buf;
}

FeedbackMsg parse_feedback(const std::string& line) {
  FeedbackMsg m;
  unsigned trial = 0;
  if (std::sscanf(line.c_str(), "RESULT %u %d %lf %lf", &trial, &m.class_index, &m.confidence,
                  &m.inference_ms) != 4)
    throw std::runtime_error("malformed feedback datagram: " + line);
  m.trial_id = trial;
  return m;
}

ProducerStats stream_producer(const DatasetManifest& manifest, const std::string& host,
                              std::uint16_t port, int chunk_ms, bool realtime) {
  if (chunk_ms <= 0) throw std::invalid_argument("stream_producer: chunk_ms must be positive");
  Fd sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (sock.fd < 0) throw std::runtime_error("cannot create socket");
  const sockaddr_in addr = make_addr(host, port);
  if (::connect(sock.fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw std::runtime_error("connection refused: " + host + ":" + std::to_string(port));
  int one = 1;
  ::setsockopt(sock.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  ProducerStats stats;
  auto clock_start = std::chrono::steady_clock::now();
  for (const TrialRef& ref : manifest.trials) {
    Epoch e;
    try {
      e = load_trial(manifest, ref);
    } catch (const std::exception& ex) {
      throw std::runtime_error("producer failed at trial " + std::to_string(stats.trials_sent) +
                               ": " + ex.what());
    }
    const auto chunk_samples = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(e.fs_hz * chunk_ms / 1000.0)));
    std::uint32_t chunk_index = 0;
    for (std::size_t start = 0; start < e.n_samples(); start += chunk_samples) {
      const std::size_t len = std::min(chunk_samples, e.n_samples() - start);
      StreamFrame f;
      // manifest trial ids repeat across classes; the wire key is the
      // session-unique manifest position
      f.trial_id = static_cast<std::uint32_t>(stats.trials_sent);
      f.chunk_index = chunk_index++;
      f.n_channels = static_cast<std::uint16_t>(e.n_channels());
      f.payload.reserve(e.n_channels() * len);
      for (std::size_t c = 0; c < e.n_channels(); ++c) {
        const auto row = e.data.row(c);
        for (std::size_t i = 0; i < len; ++i)
          f.payload.push_back(static_cast<float>(row[start + i]));
      }
      const std::string wire = encode_frame(f);
      if (realtime) {
        clock_start += std::chrono::microseconds(
            static_cast<long long>(1e6 * static_cast<double>(len) / e.fs_hz));
        std::this_thread::sleep_until(clock_start);
      }
      try {
        send_all(sock.fd, wire.data(), wire.size());
      } catch (const std::exception& ex) {
        throw std::runtime_error("producer lost the connection at trial " +
                                 std::to_string(stats.trials_sent) + ", chunk " +
                                 std::to_string(chunk_index - 1) + ": " + ex.what());
      }
      ++stats.frames_sent;
      stats.bytes_sent += wire.size();
    }
    ++stats.trials_sent;
  }
  return stats;
}

ServiceStats decode_service(const fuzzy::FuzzyModel& model, const FrequencyTable& table,
                            const ServiceConfig& cfg) {
  table.validate();
  if (model.n_classes != table.size())
    throw std::runtime_error("decode_service: model class count does not match table");
  if (!(cfg.fs_hz > 0.0)) throw std::runtime_error("decode_service: bad sampling rate");

  Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.fd < 0) throw std::runtime_error("cannot create socket");
  int one = 1;
  ::setsockopt(listener.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_addr(cfg.listen_host, cfg.listen_port);
  if (::bind(listener.fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw std::runtime_error("cannot bind " + cfg.listen_host + ":" +
                             std::to_string(cfg.listen_port));
  if (::listen(listener.fd, 1) != 0) throw std::runtime_error("listen failed");
  socklen_t alen = sizeof addr;
  ::getsockname(listener.fd, reinterpret_cast<sockaddr*>(&addr), &alen);
  if (cfg.on_listening) cfg.on_listening(ntohs(addr.sin_port));

  Fd conn(::accept(listener.fd, nullptr, nullptr));
  if (conn.fd < 0) throw std::runtime_error("accept failed");

  Fd udp(::socket(AF_INET, SOCK_DGRAM, 0));
  if (udp.fd < 0) throw std::runtime_error("cannot create feedback socket");
  const sockaddr_in fb_addr = make_addr(cfg.feedback_host, cfg.feedback_port);

  const auto window_samples =
      static_cast<std::size_t>(std::llround(cfg.window_s * cfg.fs_hz));

  ServiceStats stats;
  BoundedQueue queue(std::max<std::size_t>(cfg.queue_capacity, 2));

  std::exception_ptr rx_error;
  std::thread rx([&] {
    try {
      for (;;) {
        char lenbuf[4];
        if (!recv_exact(conn.fd, lenbuf, 4, true)) break;
        const std::uint32_t len = get_u32(lenbuf);
        if (len < 12 || len > (1u << 24)) {
          log_info("service: dropping malformed frame header (len=" + std::to_string(len) + ")");
          ++stats.frames_malformed;
          break;  // framing is unrecoverable once the length is wrong
        }
        std::string body(len, '\0');
        recv_exact(conn.fd, body.data(), len, false);
        StreamFrame f;
        f.trial_id = get_u32(body.data());
        f.chunk_index = get_u32(body.data() + 4);
        f.n_channels = get_u16(body.data() + 8);
        const std::uint16_t n_samples = get_u16(body.data() + 10);
        if (f.n_channels == 0 ||
            12 + 4u * f.n_channels * n_samples != len) {
          log_info("service: skipping malformed frame for trial " + std::to_string(f.trial_id));
          ++stats.frames_malformed;
          continue;
        }
        f.payload.resize(static_cast<std::size_t>(f.n_channels) * n_samples);
        for (std::size_t i = 0; i < f.payload.size(); ++i) {
          const std::uint32_t bits = get_u32(body.data() + 12 + 4 * i);
          float v;
          std::memcpy(&v, &bits, 4);
          f.payload[i] = v;
        }
        queue.push(std::move(f));
      }
    } catch (...) {
      rx_error = std::current_exception();
    }
    queue.close();
  });

  struct TrialBuf {
    std::vector<std::vector<double>> channels;
    bool decoded = false;
  };
  std::map<std::uint32_t, TrialBuf> buffers;

  StreamFrame f;
  while (queue.pop(f)) {
    ++stats.frames_received;
    TrialBuf& buf = buffers[f.trial_id];
    if (buf.channels.empty()) buf.channels.resize(f.n_channels);
    if (buf.channels.size() != f.n_channels) {
      ++stats.frames_malformed;
      continue;
    }
    const std::size_t n_samples = f.payload.size() / f.n_channels;
    for (std::size_t c = 0; c < f.n_channels; ++c)
      for (std::size_t i = 0; i < n_samples; ++i)
        buf.channels[c].push_back(f.payload[c * n_samples + i]);

    if (!buf.decoded && buf.channels[0].size() >= window_samples) {
      Epoch win;
      win.fs_hz = cfg.fs_hz;
      win.trial_id = f.trial_id;
      win.data = Matrix(buf.channels.size(), window_samples);
      for (std::size_t c = 0; c < buf.channels.size(); ++c)
        for (std::size_t i = 0; i < window_samples; ++i) win.data(c, i) = buf.channels[c][i];

      const auto t0 = std::chrono::steady_clock::now();
      const auto features = fuzzy::fft_features(win, cfg.feature_lo_hz, cfg.feature_hi_hz,
                                                cfg.feature_resolution_hz);
      const auto pred = fuzzy::predict(model, features);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();

      FeedbackMsg msg{f.trial_id, pred.class_index, pred.confidence, ms};
      const std::string wire = encode_feedback(msg);
      ::sendto(udp.fd, wire.data(), wire.size(), 0,
               reinterpret_cast<const sockaddr*>(&fb_addr), sizeof fb_addr);
      stats.sent.push_back(msg);
      buf.decoded = true;
      ++stats.trials_decoded;
    }
  }
  rx.join();
  if (rx_error) std::rethrow_exception(rx_error);
  return stats;
}

ListenerResult feedback_listener(std::uint16_t port, const std::vector<TrialRef>& expected,
                                 double timeout_s,
                                 const std::function<void(std::uint16_t)>& on_listening) {
  Fd udp(::socket(AF_INET, SOCK_DGRAM, 0));
  if (udp.fd < 0) throw std::runtime_error("cannot create socket");
  sockaddr_in addr = make_addr("0.0.0.0", port);
  if (::bind(udp.fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw std::runtime_error("cannot bind feedback port " + std::to_string(port));
  socklen_t alen = sizeof addr;
  ::getsockname(udp.fd, reinterpret_cast<sockaddr*>(&addr), &alen);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  ListenerResult out;
  std::map<std::uint32_t, FeedbackMsg> by_trial;
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  while (by_trial.size() < expected.size()) {
    const auto left = std::chrono::duration<double, std::milli>(
                          deadline - std::chrono::steady_clock::now())
                          .count();
    if (left <= 0) break;
    pollfd pf{udp.fd, POLLIN, 0};
    const int pr = ::poll(&pf, 1, static_cast<int>(left) + 1);
    if (pr <= 0) continue;
    char buf[512];
    const ssize_t n = ::recvfrom(udp.fd, buf, sizeof buf - 1, 0, nullptr, nullptr);
    if (n <= 0) continue;
    buf[n] = '\0';
    try {
      const FeedbackMsg m = parse_feedback(buf);
      by_trial[m.trial_id] = m;
      out.received.push_back(m);
    } catch (const std::exception& ex) {
      log_info(std::string("listener: ") + ex.what());
    }
  }

  std::vector<int> preds, truth;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    // wire trial ids are manifest positions
    const auto it = by_trial.find(static_cast<std::uint32_t>(i));
    if (it == by_trial.end()) {
      ++out.missing;
      continue;
    }
    preds.push_back(it->second.class_index);
    truth.push_back(expected[i].class_index);
  }
  if (!preds.empty()) out.accuracy = eval::accuracy(preds, truth);
  return out;
}

}  // namespace ssvep::stream
