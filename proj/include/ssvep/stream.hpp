#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssvep/epoch_io.hpp"
#include "ssvep/fuzzy.hpp"
#include "ssvep/types.hpp"

namespace ssvep::stream {

// Acquisition frames travel over a length-prefixed TCP stream:
//   u32 LE payload length (bytes after this field)
//   u32 LE trial_id, u32 LE chunk_index
//   u16 LE n_channels, u16 LE n_chunk_samples
//   f32 LE samples, channel-major
// Feedback is one ASCII datagram per decoded trial:
//   "RESULT <trial_id> <class_index> <confidence:%.4f> <inference_ms:%.2f>\n"
// Manifest trial ids repeat across classes, so the trial_id on the wire is
// the trial's position in the manifest (session-unique); the listener maps
// it back the same way.
struct StreamFrame {
  std::uint32_t trial_id = 0;
  std::uint32_t chunk_index = 0;
  std::uint16_t n_channels = 0;
  std::vector<float> payload;  // channel-major, n_channels * n_chunk_samples
};

std::string encode_frame(const StreamFrame& f);

struct FeedbackMsg {
  std::uint32_t trial_id = 0;
  int class_index = 0;
  double confidence = 0.0;
  double inference_ms = 0.0;
};

std::string encode_feedback(const FeedbackMsg& m);
FeedbackMsg parse_feedback(const std::string& line);

struct ProducerStats {
  std::size_t frames_sent = 0;
  std::size_t bytes_sent = 0;
  std::size_t trials_sent = 0;
};

// Streams every manifest trial as ordered frames over TCP to host:port.
// chunk_ms fixes the chunk duration; realtime paces emission against the
// wall clock. Resampling is not performed: frames carry the trials' own fs.
ProducerStats stream_producer(const DatasetManifest& manifest, const std::string& host,
                              std::uint16_t port, int chunk_ms = 40, bool realtime = false);

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 0;  // 0 picks an ephemeral port
  std::string feedback_host = "127.0.0.1";
  std::uint16_t feedback_port = 0;
  double window_s = 2.5;
  double fs_hz = 500.0;  // stream sampling rate; frames do not carry it
  double feature_lo_hz = 6.0;
  double feature_hi_hz = 64.0;
  double feature_resolution_hz = 0.25;
  std::size_t queue_capacity = 256;  // bounded frame hand-off, >= 2 windows
  // invoked with the bound port once the listener is ready
  std::function<void(std::uint16_t)> on_listening;
};

struct ServiceStats {
  std::size_t frames_received = 0;
  std::size_t frames_malformed = 0;
  std::size_t trials_decoded = 0;
  std::vector<FeedbackMsg> sent;
};

// Accepts one producer connection, buffers frames per trial, and once
// window_s of samples is available classifies with exactly the offline
// feature + predict path, sending one feedback datagram per trial. Returns
// after the producer closes the connection. The receive loop and the
// classifier run on separate threads joined by a bounded queue.
ServiceStats decode_service(const fuzzy::FuzzyModel& model, const FrequencyTable& table,
                            const ServiceConfig& cfg);

struct ListenerResult {
  std::vector<FeedbackMsg> received;
  double accuracy = 0.0;
  std::size_t missing = 0;
};

// Collects feedback datagrams on a UDP port until every expected trial is
// seen or timeout_s passes; accuracy is computed against expected classes.
ListenerResult feedback_listener(std::uint16_t port, const std::vector<TrialRef>& expected,
                                 double timeout_s,
                                 const std::function<void(std::uint16_t)>& on_listening = {});

}  // namespace ssvep::stream
