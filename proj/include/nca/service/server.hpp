#pragma once

// HTTP + websocket front end for steering sessions.
//   GET  /weights            list registered weight files (JSON)
//   POST /weights/<id>       upload an NCAW file (validated)
//   GET  /session            websocket upgrade; one Session per connection
// With a token configured every request must carry "Authorization: Bearer
// <token>" or a "token=<token>" query parameter.

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nca/service/registry.hpp"
#include "nca/service/session.hpp"

namespace nca::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0: any free port
    std::string token;
    std::size_t io_threads = 1;
    std::size_t max_upload = 64u << 20;
    SessionOptions session;
};

namespace detail {

class WsConnection;

// Live websocket connections, so the server can stop their sessions while
// the io context is still running.
struct Connections {
    std::mutex mu;
    std::vector<std::weak_ptr<WsConnection>> list;
};

inline std::string query_param(const std::string& target, const std::string& key) {
    const auto q = target.find('?');
    if (q == std::string::npos) return {};
    std::size_t pos = q + 1;
    while (pos < target.size()) {
        auto amp = target.find('&', pos);
        if (amp == std::string::npos) amp = target.size();
        const std::string kv = target.substr(pos, amp - pos);
        const auto eq = kv.find('=');
        if (eq != std::string::npos && kv.substr(0, eq) == key) return kv.substr(eq + 1);
        pos = amp + 1;
    }
    return {};
}

inline std::string path_of(const std::string& target) { return target.substr(0, target.find('?')); }

class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket&& socket, std::shared_ptr<WeightsRegistry> registry, SessionOptions opt)
        : ws_(std::move(socket)), registry_(std::move(registry)), opt_(opt) {}

    void stop_session() {
        if (session_) session_->stop();
    }

    template <class Request>
    void start(Request req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.read_message_max(16u << 20);
        make_session();
        ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        do_read();
    }

    void make_session() {
        std::weak_ptr<WsConnection> weak = shared_from_this();
        auto exec = ws_.get_executor();
        Sink sink;
        sink.text = [weak, exec](std::string msg) {
            net::post(exec, [weak, msg = std::move(msg)]() mutable {
                if (auto self = weak.lock()) self->queue_text(std::move(msg));
            });
        };
        sink.frame = [weak, exec](std::string meta, std::vector<std::uint8_t> bin) {
            net::post(exec, [weak, meta = std::move(meta), bin = std::move(bin)]() mutable {
                if (auto self = weak.lock()) self->queue_frame(std::move(meta), std::move(bin));
            });
        };
        session_ = std::make_unique<Session>(registry_, std::move(sink), opt_);
    }

    void do_read() {
        ws_.async_read(in_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        if (ws_.got_text())
            session_->post(beast::buffers_to_string(in_.data()));
        else
            queue_text(error_message("binary messages are not accepted"));
        in_.consume(in_.size());
        do_read();
    }

    void close() {
        if (session_) session_->stop();
        closed_ = true;
    }

    void queue_text(std::string msg) {
        if (closed_) return;
        if (texts_.size() >= 1024) texts_.pop_front();
        texts_.push_back(std::move(msg));
        do_write();
    }

    // A newer frame replaces one that has not started sending yet.
    void queue_frame(std::string meta, std::vector<std::uint8_t> bin) {
        if (closed_) return;
        pending_frame_.emplace(std::move(meta), std::move(bin));
        do_write();
    }

    void do_write() {
        if (writing_ || closed_) return;
        if (!texts_.empty()) {
            out_text_ = std::move(texts_.front());
            texts_.pop_front();
            write_text(false);
        } else if (pending_frame_) {
            out_text_ = std::move(pending_frame_->first);
            out_bin_ = std::move(pending_frame_->second);
            pending_frame_.reset();
            write_text(true);
        }
    }

    void write_text(bool then_binary) {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(out_text_), [self = shared_from_this(), then_binary](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            if (!then_binary) {
                self->writing_ = false;
                return self->do_write();
            }
            self->ws_.binary(true);
            self->ws_.async_write(net::buffer(self->out_bin_), [self](beast::error_code ec2, std::size_t) {
                if (ec2) return self->close();
                self->writing_ = false;
                self->do_write();
            });
        });
    }

public:
    ~WsConnection() {
        if (session_) session_->stop();
    }

private:
    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<WeightsRegistry> registry_;
    SessionOptions opt_;
    std::unique_ptr<Session> session_;
    beast::flat_buffer in_;
    std::deque<std::string> texts_;
    std::optional<std::pair<std::string, std::vector<std::uint8_t>>> pending_frame_;
    std::string out_text_;
    std::vector<std::uint8_t> out_bin_;
    bool writing_ = false;
    bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket&& socket, std::shared_ptr<WeightsRegistry> registry, const ServerOptions& opt,
                   std::shared_ptr<Connections> conns)
        : stream_(std::move(socket)), registry_(std::move(registry)), opt_(opt), conns_(std::move(conns)) {}

    void start() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::do_read, shared_from_this()));
    }

private:
    void do_read() {
        parser_.emplace();
        parser_->body_limit(opt_.max_upload);
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, *parser_,
                         beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

    bool authorized(const http::request<http::string_body>& req) const {
        if (opt_.token.empty()) return true;
        const std::string target(req.target());
        if (query_param(target, "token") == opt_.token) return true;
        const auto it = req.find(http::field::authorization);
        return it != req.end() && std::string(it->value()) == "Bearer " + opt_.token;
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        auto req = parser_->release();
        if (!authorized(req)) return send(reply(req, http::status::unauthorized, error_message("missing or bad token")));
        const std::string path = path_of(std::string(req.target()));
        if (websocket::is_upgrade(req)) {
            if (path != "/session") return send(reply(req, http::status::not_found, error_message("no such endpoint")));
            stream_.expires_never();
            auto ws = std::make_shared<WsConnection>(stream_.release_socket(), registry_, opt_.session);
            {
                std::lock_guard lk(conns_->mu);
                std::erase_if(conns_->list, [](const auto& w) { return w.expired(); });
                conns_->list.push_back(ws);
            }
            ws->start(std::move(req));
            return;
        }
        send(handle(req, path));
    }

    http::response<http::string_body> reply(const http::request<http::string_body>& req, http::status status,
                                            std::string body, const char* type = "application/json") const {
        http::response<http::string_body> res{status, req.version()};
        res.set(http::field::content_type, type);
        res.set(http::field::access_control_allow_origin, "*");
        res.set(http::field::access_control_allow_headers, "Authorization, Content-Type");
        res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res.keep_alive(req.keep_alive());
        res.body() = std::move(body);
        res.prepare_payload();
        return res;
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req, const std::string& path) {
        if (req.method() == http::verb::options) return reply(req, http::status::no_content, "");
        if (path == "/weights" && req.method() == http::verb::get)
            return reply(req, http::status::ok, registry_->list().dump());
        if (path.rfind("/weights/", 0) == 0 && (req.method() == http::verb::post || req.method() == http::verb::put)) {
            const std::string id = path.substr(9);
            const auto& body = req.body();
            try {
                const Weights w = registry_->add(id, std::vector<std::uint8_t>(body.begin(), body.end()));
                json info{{"id", id}, {"channels", w.channels}, {"hidden", w.hidden}, {"variant", to_string(w.variant)}};
                return reply(req, http::status::created, info.dump());
            } catch (const Error& e) {
                return reply(req, http::status::bad_request, error_message(e.what()));
            }
        }
        if (path == "/health") return reply(req, http::status::ok, "{\"ok\":true}");
        return reply(req, http::status::not_found, error_message("no such endpoint"));
    }

    void send(http::response<http::string_body> res) {
        auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
        http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (sp->need_eof()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    std::optional<http::request_parser<http::string_body>> parser_;
    std::shared_ptr<WeightsRegistry> registry_;
    const ServerOptions& opt_;
    std::shared_ptr<Connections> conns_;
};

}  // namespace detail

class Server {
public:
    Server(ServerOptions opt, std::shared_ptr<WeightsRegistry> registry)
        : opt_(std::move(opt)), registry_(std::move(registry)), acceptor_(net::make_strand(ioc_)) {
        const tcp::endpoint ep{net::ip::make_address(opt_.address), opt_.port};
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen(net::socket_base::max_listen_connections);
    }

    ~Server() { stop(); }

    unsigned short port() const { return acceptor_.local_endpoint().port(); }

    void start() {
        do_accept();
        for (std::size_t i = 0; i < std::max<std::size_t>(1, opt_.io_threads); ++i)
            threads_.emplace_back([this] { ioc_.run(); });
    }

    void stop() {
        {
            std::lock_guard lk(conns_->mu);
            for (auto& w : conns_->list)
                if (auto c = w.lock()) c->stop_session();
        }
        ioc_.stop();
        for (auto& t : threads_)
            if (t.joinable()) t.join();
        threads_.clear();
    }

private:
    void do_accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (!ec) std::make_shared<detail::HttpConnection>(std::move(socket), registry_, opt_, conns_)->start();
            do_accept();
        });
    }

    ServerOptions opt_;
    std::shared_ptr<WeightsRegistry> registry_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
    std::vector<std::thread> threads_;
    std::shared_ptr<detail::Connections> conns_ = std::make_shared<detail::Connections>();
};

}  // namespace nca::service
