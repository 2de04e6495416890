#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace cogniloc {

/// Minimal process-wide log sink. Degradations and clamps are reported here;
/// tests may install a capture sink.
class Log {
  public:
    using Sink = std::function<void(const std::string&)>;

    static void warn(const std::string& message) {
        auto& self = instance();
        std::lock_guard<std::mutex> lock(self.mutex_);
        if (self.sink_) {
            self.sink_("[cogniloc] " + message);
        } else {
            std::clog << "[cogniloc] " << message << '\n';
        }
    }

    static void set_sink(Sink sink) {
        auto& self = instance();
        std::lock_guard<std::mutex> lock(self.mutex_);
        self.sink_ = std::move(sink);
    }

    static void reset_sink() { set_sink(nullptr); }

  private:
    static Log& instance() {
        static Log log;
        return log;
    }

    std::mutex mutex_;
    Sink sink_;
};

}  // namespace cogniloc
