// Ransom-note and benign-document text generators.
#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mdr/simulator.hpp"

namespace mdr {

namespace {

template <typename C>
const auto& pick(std::mt19937_64& rng, const C& pool) {
  std::uniform_int_distribution<std::size_t> d(0, std::size(pool) - 1);
  return pool[d(rng)];
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::string random_token(std::mt19937_64& rng, std::string_view alphabet, std::size_t len) {
  std::uniform_int_distribution<std::size_t> d(0, alphabet.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out += alphabet[d(rng)];
  return out;
}

constexpr std::string_view kLower = "abcdefghijklmnopqrstuvwxyz";
constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::string_view kBase58 = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

// Replaces {amount} {btc} {email} {id} {hours} {onion} {name} {days} placeholders.
std::string fill(std::string text, std::mt19937_64& rng) {
  auto replace_all = [&](std::string_view key, auto make) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
      std::string value = make();
      text.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  replace_all("{amount}", [&] { return std::to_string(std::uniform_int_distribution<int>(3, 95)(rng) * 100); });
  replace_all("{btc}", [&] { return "bc1q" + random_token(rng, kAlnum, 34); });
  replace_all("{email}", [&] {
    static constexpr std::array<std::string_view, 5> domains = {"onionmail.org", "protonmail.com", "tutanota.com",
                                                                "cock.li", "mail.com"};
    return random_token(rng, kLower, 8) + "@" + std::string(pick(rng, domains));
  });
  replace_all("{id}", [&] { return random_token(rng, kBase58, 24); });
  replace_all("{onion}", [&] { return "http://" + random_token(rng, kAlnum, 40) + ".onion"; });
  replace_all("{hours}", [&] { return std::to_string(std::uniform_int_distribution<int>(2, 9)(rng) * 12); });
  replace_all("{days}", [&] { return std::to_string(std::uniform_int_distribution<int>(3, 30)(rng)); });
  replace_all("{name}", [&] {
    static constexpr std::array<std::string_view, 8> names = {"Anna", "Mark", "Julia", "Tom",
                                                              "Priya", "Chen", "Omar", "Lena"};
    return std::string(pick(rng, names));
  });
  return text;
}

// ---- ransom note sections -------------------------------------------------

constexpr std::array<std::string_view, 12> kHeadlines = {
    "YOUR FILES ARE ENCRYPTED!",
    "All your files have been encrypted!",
    "Your computer is locked.",
    "ATTENTION! Your network has been compromised and all your files are encrypted.",
    "Oops, your important files are encrypted.",
    "!!! ALL YOUR DOCUMENTS, PHOTOS AND DATABASES ARE ENCRYPTED !!!",
    "What happened to your files?",
    "Your personal ID: {id}",
    "Hello! Your company has been attacked.",
    "YOUR NETWORK IS ENCRYPTED NOW",
    "All of your files are encrypted with strong military grade algorithms.",
    "Your data is stolen and encrypted.",
};

constexpr std::array<std::string_view, 18> kThreats = {
    "All your files have been encrypted with a strong algorithm and you will not be able to decrypt them without our key.",
    "Your documents, photos, databases and other important files are encrypted.",
    "If you do not pay the ransom your files will be lost forever.",
    "Any attempt to restore your files with third party software will damage them permanently.",
    "Do not rename encrypted files and do not try to decrypt your data using third party software.",
    "We have also downloaded your sensitive data and we will publish it if you do not pay.",
    "If you do not contact us within {hours} hours the price will be doubled.",
    "After {days} days your private key will be deleted and your files will be lost forever.",
    "Nobody can recover your files without our decryption service.",
    "The only way to restore your files is to buy the private key from us.",
    "Your files are encrypted with RSA-2048 and AES-256 and cannot be recovered without the key.",
    "Do not turn off or restart your computer, this may damage the encrypted files.",
    "Your confidential data will be sold or published on our leak site.",
    "Antivirus software and data recovery companies cannot help you.",
    "If you try to use any backup tools your files will be damaged and lost forever.",
    "Every hour of delay will increase the price of the decryption key.",
    "We are not interested in destroying your business, we only want money.",
    "Do not waste your time, nobody can decrypt your files except us.",
};

constexpr std::array<std::string_view, 14> kPayments = {
    "To decrypt your files you need to pay {amount} USD in Bitcoin.",
    "Send {amount} USD worth of Bitcoin to this address: {btc}",
    "Bitcoin address: {btc}",
    "Payment is accepted in Bitcoin only.",
    "You have to pay for the decryption key in Bitcoin.",
    "Buy Bitcoin on any exchange and send the payment to the wallet below.",
    "After payment you will receive the decryption tool for all your files.",
    "The price for the decryption key is {amount} USD.",
    "Follow the instructions on the payment page to buy the private key.",
    "Once the payment is confirmed we will send you the decryptor.",
    "Open the payment page in the Tor browser: {onion}",
    "Pay the ransom and you will get all your files back.",
    "Transfer the payment to the wallet {btc} and send us the transaction ID.",
    "To get the decryptor you must pay within {hours} hours.",
};

constexpr std::array<std::string_view, 9> kOffers = {
    "You can decrypt one file for free as a guarantee.",
    "Send us 2 files and we will decrypt them for free to prove that we can restore your files.",
    "As a guarantee we can decrypt 3 files for free.",
    "Free decryption of one small file is available as proof.",
    "We guarantee that you will recover all your files after payment.",
    "You can test our decryption service for free before you pay.",
    "Our decryption service is reliable and we always keep our promises.",
    "We will give you a discount if you contact us in the first {hours} hours.",
    "We also offer file recovery support after payment.",
};

constexpr std::array<std::string_view, 11> kContacts = {
    "Contact us by email: {email}",
    "Write to our email {email} and include your personal ID {id}.",
    "If you have any questions contact our support: {email}",
    "Send your personal ID {id} to {email}",
    "Contact us via Tor chat: {onion}",
    "Reserve email: {email}",
    "Write to us in the chat on our website: {onion}",
    "Your personal ID: {id}",
    "Our support team will answer you within {hours} hours.",
    "To contact us download the Tor browser and open {onion}",
    "In the subject line write your personal ID.",
};

// Formulaic sentences shared by most families.
constexpr std::array<std::string_view, 6> kCore = {
    "All your files have been encrypted.",
    "To decrypt your files you need to buy the decryption key.",
    "Do not try to decrypt your files yourself, you will damage them.",
    "Contact us to restore your files.",
    "Your files are encrypted and you cannot open them.",
    "If you want to restore your files you need to pay.",
};

// ---- benign document sections ---------------------------------------------

constexpr std::array<std::string_view, 10> kBenignOpeners = {
    "Dear colleagues,",
    "Hello {name},",
    "IT Service Desk notice",
    "Invoice {id}",
    "Security bulletin",
    "Release notes",
    "Backup report",
    "Hi team,",
    "Software license agreement",
    "Customer support",
};

constexpr std::array<std::string_view, 36> kBenignBody = {
    "Your files are synchronized with the company cloud storage every night.",
    "All laptops use full disk encryption to protect your data if the device is lost.",
    "Please restore your files from the weekly backup if you deleted them by mistake.",
    "The attached invoice is due within {days} days of the date above.",
    "Payment can be made by bank transfer or credit card.",
    "Please send the payment to the account listed at the bottom of this letter.",
    "If you have any questions about this invoice please contact our accounting team.",
    "The new version adds support for encrypted archives and faster file compression.",
    "We fixed a bug where some files could not be opened after an update.",
    "Remember to lock your computer when you leave your desk.",
    "Never send your password by email, the IT team will never ask for it.",
    "Phishing emails often ask you to pay urgently or to open an attachment.",
    "The backup job finished successfully and all files were copied.",
    "Your personal data is processed according to our privacy policy.",
    "The trial period ends after {days} days, after that you need to buy a license key.",
    "You can contact our support team by email at {email}.",
    "Our office will be closed on Friday for maintenance of the network.",
    "Please upload the documents, photos and spreadsheets to the shared folder.",
    "Files older than one year will be moved to the archive.",
    "The meeting notes and the project plan are attached to this email.",
    "Data recovery is possible only if a recent backup exists.",
    "We accept payment in USD, EUR and GBP.",
    "Thank you for your order, your payment of {amount} USD was received.",
    "The encryption keys are stored in a hardware security module.",
    "Do not install software from unknown websites on your work computer.",
    "For help with the new email client see the attached guide.",
    "Your account will be locked after five failed login attempts.",
    "If you lost access to your files please open a ticket with the service desk.",
    "We recommend keeping at least two copies of important files.",
    "The database migration is scheduled for next weekend.",
    "Some people reported that the shared drive was slow on Monday.",
    "Your subscription renews automatically every year unless you cancel it.",
    "Ransomware attacks are increasing, so please report suspicious emails.",
    "The price of the premium plan is {amount} USD per year.",
    "Attached you will find the quarterly report and the budget spreadsheet.",
    "You can recover deleted files from the recycle bin within {days} days.",
};

// Awareness material about ransomware: same words, different phrasing.
constexpr std::array<std::string_view, 16> kAwareness = {
    "Criminals encrypt company data and then demand a ransom, usually paid in bitcoin.",
    "Paying attackers does not guarantee that a working decryption tool will be delivered.",
    "Keep offline copies so that encrypted servers can be rebuilt quickly.",
    "Victims often receive a message with a personal identifier and an email address of the criminals.",
    "Law enforcement advises organizations never to pay extortion demands.",
    "Some groups also steal confidential documents and threaten to leak them online.",
    "Tor sites are used by gangs to negotiate with victims anonymously.",
    "Recovery from an infection can take weeks without tested backups.",
    "Attackers frequently delete shadow copies before they start encrypting documents.",
    "Free decryptors exist for several older families thanks to security researchers.",
    "Wallet addresses used by criminals are tracked by blockchain analysis firms.",
    "Report any message that claims your computer is locked to the security team immediately.",
    "A ransom demand typically sets a deadline and threatens to raise the price.",
    "Strong passwords and timely patches reduce the chance of an intrusion.",
    "Email attachments and exposed remote desktop services remain the most common entry points.",
    "Incident responders isolate infected machines from the network first.",
};

constexpr std::array<std::string_view, 8> kBenignClosers = {
    "Best regards, {name}",
    "Thank you, IT Service Desk",
    "Kind regards, the accounting team",
    "Thanks, {name}",
    "Contact: {email}",
    "Reference: {id}",
    "This message was generated automatically, please do not reply.",
    "See you next week.",
};

void append(std::string& out, std::string_view sentence, std::mt19937_64& rng) {
  if (!out.empty()) out += chance(rng, 0.3) ? "\n\n" : (chance(rng, 0.5) ? "\n" : " ");
  out += fill(std::string(sentence), rng);
}

// Picks `n` distinct entries from `pool` in random order.
template <typename C>
std::vector<std::string_view> sample(std::mt19937_64& rng, const C& pool, std::size_t n) {
  std::vector<std::string_view> items(std::begin(pool), std::end(pool));
  std::shuffle(items.begin(), items.end(), rng);
  items.resize(std::min(n, items.size()));
  return items;
}

std::size_t between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

std::string generate_note(std::mt19937_64& rng) {
  std::string out;
  append(out, pick(rng, kHeadlines), rng);
  if (chance(rng, 0.2)) {
    // Terse note: the bare minimum.
    for (auto s : sample(rng, kCore, between(rng, 1, 2))) append(out, s, rng);
    append(out, pick(rng, kPayments), rng);
    append(out, pick(rng, kContacts), rng);
    return out + "\n";
  }
  for (auto s : sample(rng, kCore, between(rng, 2, 4))) append(out, s, rng);
  for (auto s : sample(rng, kThreats, between(rng, 2, 5))) append(out, s, rng);
  for (auto s : sample(rng, kPayments, between(rng, 2, 4))) append(out, s, rng);
  if (chance(rng, 0.7)) append(out, pick(rng, kOffers), rng);
  for (auto s : sample(rng, kContacts, between(rng, 1, 3))) append(out, s, rng);
  return out + "\n";
}

std::string generate_benign_doc(std::mt19937_64& rng) {
  std::string out;
  append(out, pick(rng, kBenignOpeners), rng);
  for (auto s : sample(rng, kBenignBody, between(rng, 4, 10))) append(out, s, rng);
  if (chance(rng, 0.25)) {
    for (auto s : sample(rng, kAwareness, between(rng, 6, 14))) append(out, s, rng);
  }
  append(out, pick(rng, kBenignClosers), rng);
  return out + "\n";
}

NoteCorpus build_note_corpus(std::size_t n_notes, std::size_t n_benign, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NoteCorpus corpus;
  for (std::size_t i = 0; i < n_notes; ++i) corpus.notes.push_back(generate_note(rng));
  for (std::size_t i = 0; i < n_benign; ++i) corpus.benign.push_back(generate_benign_doc(rng));
  return corpus;
}

}  // namespace mdr
