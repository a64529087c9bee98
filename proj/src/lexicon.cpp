#include "mqag/lexicon.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "mqag/text.hpp"

namespace mqag::lexicon {

namespace {

constexpr std::string_view kBaseVerbs[] = {
    "accept", "act", "add", "admire", "admit", "agree", "allow", "answer", "appear", "argue",
    "arrive", "ask", "attack", "attend", "avoid", "bake", "bark", "bat", "beat", "become",
    "beg", "begin", "belong", "bend", "bite", "blow", "board", "boil", "borrow", "bounce",
    "bow", "break", "breathe", "bring", "brush", "build", "burn", "buy", "call", "carry",
    "catch", "cause", "celebrate", "change", "chase", "chat", "check", "cheer", "chew",
    "choose", "clap", "clean", "climb", "close", "collect", "comb", "come", "compete",
    "complain", "conduct", "consider", "contain", "contrast", "cook", "count", "cover",
    "crawl", "create", "cross", "cry", "cut", "dance", "deal", "decide", "define", "deliver",
    "depend", "derive", "describe", "destroy", "die", "differ", "dig", "dine", "direct",
    "discuss", "dive", "do", "drag", "draw", "dream", "dress", "drink", "drive", "drop",
    "eat", "end", "enjoy", "enter", "entail", "escape", "examine", "exercise", "expect",
    "explain", "face", "fall", "feed", "feel", "fight", "fill", "find", "finish", "fish",
    "fix", "float", "fly", "follow", "forget", "gather", "get", "give", "glance", "go",
    "grab", "greet", "grin", "grow", "guard", "guide", "hand", "hang", "happen", "hate",
    "have", "hear", "help", "hide", "hit", "hold", "hope", "hug", "hunt", "hurry", "hurt",
    "ignore", "imagine", "include", "interview", "introduce", "invite", "involve", "join",
    "jog", "joke", "judge", "jump", "keep", "kick", "kill", "kiss", "kneel", "knit", "knock",
    "know", "land", "laugh", "lay", "lead", "lean", "learn", "leave", "lend", "let", "lick",
    "lie", "lift", "like", "listen", "live", "load", "locate", "look", "lose", "love", "make", "manage",
    "march", "marry", "mean", "measure", "meet", "mix", "motivate", "move", "need", "nod",
    "notice", "obey", "observe", "obstruct", "occupy", "offer", "open", "order", "own",
    "paint", "park", "pass", "pat", "pay", "perform", "pet", "pick", "place", "plan",
    "plant", "play", "point", "pose", "pour", "practice", "pray", "prefer", "prepare",
    "present", "press", "pretend", "protect", "protest", "pull", "punch", "push", "put",
    "question", "race", "rain", "raise", "reach", "read", "receive", "rehearse", "relate",
    "relax", "remember", "repair", "rescue", "require", "resemble", "rest", "return",
    "ride", "ring", "rise", "roll", "row", "rub", "run", "rush", "sail", "save", "say",
    "scream", "search", "see", "seek", "sell", "send", "serve", "set", "sew", "shake",
    "share", "shave", "shine", "shoot", "shop", "shout", "show", "shut", "sing", "sink",
    "sip", "sit", "skate", "ski", "skip", "sleep", "slice", "slide", "slip", "smell",
    "smile", "smoke", "sneak", "speak", "spend", "spill", "spin", "stand", "stare", "start",
    "stay", "steal", "step", "stir", "stop", "strike", "study", "surf", "surprise",
    "surround", "swim", "swing", "symbolize", "take", "talk", "taste", "teach", "tear",
    "tell", "thank", "think", "throw", "tie", "touch", "train", "travel", "trip", "try",
    "turn", "type", "understand", "use", "visit", "wait", "wake", "walk", "want", "warn",
    "wash", "watch", "wave", "wear", "weep", "whisper", "win", "wipe", "wish", "wonder",
    "work", "worry", "wrap", "write", "yell"};

struct Irregular {
    std::string_view base, past, participle;
};

constexpr Irregular kIrregular[] = {
    {"be", "was", "been"},         {"become", "became", "become"}, {"begin", "began", "begun"},
    {"bend", "bent", "bent"},       {"bite", "bit", "bitten"},      {"blow", "blew", "blown"},
    {"break", "broke", "broken"},   {"bring", "brought", "brought"}, {"build", "built", "built"},
    {"buy", "bought", "bought"},    {"catch", "caught", "caught"},  {"choose", "chose", "chosen"},
    {"come", "came", "come"},       {"cut", "cut", "cut"},          {"deal", "dealt", "dealt"},
    {"dig", "dug", "dug"},          {"do", "did", "done"},          {"draw", "drew", "drawn"},
    {"drink", "drank", "drunk"},    {"drive", "drove", "driven"},   {"eat", "ate", "eaten"},
    {"fall", "fell", "fallen"},     {"feed", "fed", "fed"},         {"feel", "felt", "felt"},
    {"fight", "fought", "fought"},  {"find", "found", "found"},     {"fly", "flew", "flown"},
    {"forget", "forgot", "forgotten"}, {"get", "got", "gotten"},   {"give", "gave", "given"},
    {"go", "went", "gone"},         {"grow", "grew", "grown"},      {"hang", "hung", "hung"},
    {"have", "had", "had"},         {"hear", "heard", "heard"},     {"hide", "hid", "hidden"},
    {"hit", "hit", "hit"},          {"hold", "held", "held"},       {"hurt", "hurt", "hurt"},
    {"keep", "kept", "kept"},       {"kneel", "knelt", "knelt"},    {"know", "knew", "known"},
    {"lay", "laid", "laid"},        {"lead", "led", "led"},         {"lend", "lent", "lent"},
    {"let", "let", "let"},          {"lie", "lay", "lain"},         {"lose", "lost", "lost"},
    {"make", "made", "made"},       {"mean", "meant", "meant"},     {"meet", "met", "met"},
    {"pay", "paid", "paid"},        {"put", "put", "put"},          {"read", "read", "read"},
    {"ride", "rode", "ridden"},     {"ring", "rang", "rung"},       {"rise", "rose", "risen"},
    {"run", "ran", "run"},          {"say", "said", "said"},        {"see", "saw", "seen"},
    {"seek", "sought", "sought"},   {"sell", "sold", "sold"},       {"send", "sent", "sent"},
    {"set", "set", "set"},          {"sew", "sewed", "sewn"},       {"shake", "shook", "shaken"},
    {"shine", "shone", "shone"},    {"shoot", "shot", "shot"},      {"show", "showed", "shown"},
    {"shut", "shut", "shut"},       {"sing", "sang", "sung"},       {"sink", "sank", "sunk"},
    {"sit", "sat", "sat"},          {"sleep", "slept", "slept"},    {"slide", "slid", "slid"},
    {"speak", "spoke", "spoken"},   {"spend", "spent", "spent"},    {"spin", "spun", "spun"},
    {"stand", "stood", "stood"},    {"steal", "stole", "stolen"},   {"strike", "struck", "struck"},
    {"swim", "swam", "swum"},       {"swing", "swung", "swung"},    {"take", "took", "taken"},
    {"teach", "taught", "taught"},  {"tear", "tore", "torn"},       {"tell", "told", "told"},
    {"think", "thought", "thought"}, {"throw", "threw", "thrown"},  {"understand", "understood", "understood"},
    {"wake", "woke", "woken"},      {"wear", "wore", "worn"},       {"weep", "wept", "wept"},
    {"win", "won", "won"},          {"write", "wrote", "written"},
};

// Consonant-vowel-consonant stems that double their final letter.
const std::unordered_set<std::string_view>& doubling() {
    static const std::unordered_set<std::string_view> s = {
        "bat", "beg", "begin", "chat", "clap", "cut", "dig", "drag", "drop", "get", "grab",
        "grin", "hit", "hug", "jog", "knit", "let", "nod", "pat", "pet", "plan", "put", "rub",
        "run", "set", "shop", "shut", "sip", "sit", "skip", "slip", "spin", "step", "stir",
        "stop", "swim", "trip", "win", "wrap", "admit", "prefer", "knot"};
    return s;
}

// Past forms that collide with common non-verb readings.
const std::unordered_set<std::string_view>& ambiguous_forms() {
    static const std::unordered_set<std::string_view> s = {"left", "lay", "saw", "rose",
                                                           "bit", "fell", "lead", "wind"};
    return s;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

const std::unordered_map<std::string, VerbInfo>& form_table() {
    static const std::unordered_map<std::string, VerbInfo> table = [] {
        std::unordered_map<std::string, VerbInfo> t;
        std::map<std::string_view, const Irregular*> irregular;
        for (const auto& irr : kIrregular) irregular.emplace(irr.base, &irr);

        auto add = [&](std::string form, std::string_view base, VerbForm kind) {
            if (ambiguous_forms().contains(form) && form != base) return;
            t.try_emplace(std::move(form), VerbInfo{std::string(base), kind});
        };
        for (auto base : kBaseVerbs) {
            add(std::string(base), base, VerbForm::Base);
            add(third_person(base), base, VerbForm::ThirdPerson);
            add(gerund(base), base, VerbForm::Gerund);
            if (auto it = irregular.find(base); it != irregular.end()) {
                add(std::string(it->second->past), base, VerbForm::Past);
                add(std::string(it->second->participle), base, VerbForm::PastParticiple);
            } else {
                add(past(base), base, VerbForm::Past);
            }
        }
        return t;
    }();
    return table;
}

constexpr std::string_view kPrepositions[] = {
    "in front of", "in back of", "on top of", "in the middle of", "next to", "close to",
    "away from", "out of", "instead of", "far from", "ahead of", "along with",
    "together with", "across from", "inside of", "outside of", "to the left of",
    "to the right of", "in between", "in", "on", "at", "by", "with", "near", "behind",
    "beside", "besides", "under", "over", "above", "below", "into", "onto", "inside",
    "outside", "across", "along", "around", "through", "toward", "towards", "between",
    "among", "against", "from", "to", "for", "of", "about", "beneath", "beyond", "after",
    "before", "during", "without", "within", "upon", "off", "underneath", "opposite",
    "amid", "via", "as"};

const std::vector<std::vector<std::string>>& preposition_tokens() {
    static const std::vector<std::vector<std::string>> list = [] {
        std::vector<std::vector<std::string>> out;
        for (auto p : kPrepositions) out.push_back(text::tokens(p));
        std::stable_sort(out.begin(), out.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        return out;
    }();
    return list;
}

}  // namespace

std::optional<VerbInfo> verb(std::string_view token) {
    static const std::unordered_map<std::string_view, VerbInfo> special = {
        {"is", {"be", VerbForm::ThirdPerson}},   {"are", {"be", VerbForm::Base}},
        {"am", {"be", VerbForm::Base}},          {"was", {"be", VerbForm::Past}},
        {"were", {"be", VerbForm::Past}},        {"be", {"be", VerbForm::Base}},
        {"been", {"be", VerbForm::PastParticiple}}, {"being", {"be", VerbForm::Gerund}},
        {"has", {"have", VerbForm::ThirdPerson}}};
    if (auto it = special.find(token); it != special.end()) return it->second;
    const auto& t = form_table();
    if (auto it = t.find(std::string(token)); it != t.end()) return it->second;
    return std::nullopt;
}

bool is_copula(std::string_view t) {
    return t == "is" || t == "are" || t == "was" || t == "were" || t == "am" || t == "be" ||
           t == "been" || t == "being";
}

bool is_modal(std::string_view t) {
    return t == "can" || t == "could" || t == "will" || t == "would" || t == "should" ||
           t == "may" || t == "might" || t == "must" || t == "shall";
}

bool is_auxiliary(std::string_view t) {
    return is_copula(t) || is_modal(t) || t == "do" || t == "does" || t == "did" ||
           t == "has" || t == "have" || t == "had";
}

bool is_determiner(std::string_view t) {
    static const std::unordered_set<std::string_view> s = {
        "a", "an", "the", "this", "that", "these", "those", "his", "her", "their", "its",
        "my", "your", "our", "another", "some"};
    return s.contains(t);
}

bool is_conjunction_splitter(std::string_view t) { return t == "because" || t == "so"; }

bool is_verbal(std::string_view t) { return is_auxiliary(t) || verb(t).has_value(); }

std::size_t preposition_at(std::span<const std::string> tokens, std::size_t i) {
    for (const auto& prep : preposition_tokens()) {
        if (i + prep.size() > tokens.size()) continue;
        if (std::equal(prep.begin(), prep.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i)))
            return prep.size();
    }
    return 0;
}

bool is_preposition_phrase(std::string_view phrase) {
    auto toks = text::tokens(phrase);
    return !toks.empty() && preposition_at(toks, 0) == toks.size();
}

std::string third_person(std::string_view base) {
    std::string b(base);
    if (b == "be") return "is";
    if (b == "have") return "has";
    if (b.empty()) return b;
    auto ends = [&](std::string_view suf) { return b.ends_with(suf); };
    if (ends("s") || ends("sh") || ends("ch") || ends("x") || ends("z") || ends("o"))
        return b + "es";
    if (b.size() > 1 && b.back() == 'y' && !is_vowel(b[b.size() - 2]))
        return b.substr(0, b.size() - 1) + "ies";
    return b + "s";
}

std::string gerund(std::string_view base) {
    std::string b(base);
    if (b == "be") return "being";
    if (b.ends_with("ie")) return b.substr(0, b.size() - 2) + "ying";
    if (doubling().contains(b)) return b + b.back() + "ing";
    if (b.size() > 2 && b.back() == 'e' && !b.ends_with("ee") && !b.ends_with("ye") &&
        !b.ends_with("oe"))
        return b.substr(0, b.size() - 1) + "ing";
    return b + "ing";
}

std::string past(std::string_view base) {
    for (const auto& irr : kIrregular)
        if (irr.base == base) return std::string(irr.past);
    std::string b(base);
    if (b.ends_with("e")) return b + "d";
    if (b.size() > 1 && b.back() == 'y' && !is_vowel(b[b.size() - 2]))
        return b.substr(0, b.size() - 1) + "ied";
    if (doubling().contains(b)) return b + b.back() + "ed";
    return b + "ed";
}

bool is_stative(std::string_view base) {
    static const std::unordered_set<std::string_view> s = {
        "have", "mean", "want", "need", "contain", "resemble", "belong", "own", "know",
        "like", "love", "hate", "differ", "relate", "contrast", "entail", "require",
        "involve", "symbolize", "derive", "cause", "prefer", "understand", "include"};
    return s.contains(base);
}

}  // namespace mqag::lexicon
