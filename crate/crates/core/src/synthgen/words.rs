use crate::domain::Category;

pub(super) fn subcategories(c: Category) -> &'static [&'static str] {
    match c {
        Category::News => &["news-general", "news-politics", "news-economy"],
        Category::TvSeries => &["series-drama", "series-comedy", "series-crime", "series-soap"],
        Category::Entertainment => &["ent-talkshow", "ent-reality", "ent-quiz", "ent-music"],
        Category::Kids => &["kids-cartoon", "kids-education", "kids-adventure"],
        Category::Documentaries => &["doc-nature", "doc-history", "doc-science", "doc-travel"],
        Category::Sports => &["sports-football", "sports-tennis", "sports-motor", "sports-magazine"],
        Category::Movies => &["movies-action", "movies-drama", "movies-comedy", "movies-thriller"],
        Category::Adults => &["adults-late", "adults-erotic"],
    }
}

/// Title words per category: adjectives, then nouns.
pub(super) fn title_words(c: Category) -> (&'static [&'static str], &'static [&'static str]) {
    match c {
        Category::News => (
            &[
                "Morning", "Evening", "Night", "National", "World", "Daily", "Weekly", "Global", "Regional", "Prime",
            ],
            &[
                "Report",
                "Bulletin",
                "Briefing",
                "Journal",
                "Update",
                "Headlines",
                "Review",
                "Desk",
                "Edition",
                "Dispatch",
            ],
        ),
        Category::TvSeries => (
            &[
                "Broken", "Silent", "Golden", "Hidden", "Crimson", "Lonely", "Wild", "Frozen", "Secret", "Distant",
                "Burning", "Quiet",
            ],
            &[
                "Street", "Hospital", "Harbor", "Family", "Precinct", "Valley", "Empire", "Station", "Island",
                "Hearts", "Bridges", "Lies",
            ],
        ),
        Category::Entertainment => (
            &[
                "Big", "Late", "Grand", "Lucky", "Super", "Bright", "Happy", "Crazy", "Star", "Open",
            ],
            &[
                "Show",
                "Stage",
                "Quiz",
                "Party",
                "Talk",
                "Challenge",
                "Studio",
                "Night",
                "Game",
                "Spotlight",
            ],
        ),
        Category::Kids => (
            &[
                "Little", "Tiny", "Brave", "Magic", "Jolly", "Clever", "Bouncy", "Sunny", "Cosmic", "Silly",
            ],
            &[
                "Dragons",
                "Robots",
                "Bears",
                "Pirates",
                "Friends",
                "Explorers",
                "Bunnies",
                "Wizards",
                "Trains",
                "Dinos",
            ],
        ),
        Category::Documentaries => (
            &[
                "Ancient", "Deep", "Secret", "Wild", "Lost", "Frozen", "Great", "Hidden", "Living", "Amazing",
            ],
            &[
                "Oceans", "Planet", "Empires", "Forests", "Machines", "Kingdoms", "Rivers", "Deserts", "Worlds",
                "Cities",
            ],
        ),
        Category::Sports => (
            &[
                "Live",
                "Champions",
                "Grand",
                "Super",
                "Classic",
                "Total",
                "Extreme",
                "Weekend",
                "Final",
                "Premier",
            ],
            &[
                "Football",
                "Tennis",
                "Racing",
                "Match",
                "League",
                "Cup",
                "Derby",
                "Open",
                "Round",
                "Highlights",
            ],
        ),
        Category::Movies => (
            &[
                "Dark",
                "Last",
                "Red",
                "Eternal",
                "Midnight",
                "Final",
                "Savage",
                "Fallen",
                "Iron",
                "Endless",
                "Shattered",
                "Forgotten",
            ],
            &[
                "Horizon",
                "Vengeance",
                "Promise",
                "Shadow",
                "Storm",
                "Escape",
                "Legacy",
                "Code",
                "Mirror",
                "Frontier",
                "Winter",
                "Paradise",
            ],
        ),
        Category::Adults => (
            &["Velvet", "Late", "Private", "Scarlet", "Hot", "Secret"],
            &["Nights", "Affairs", "Desires", "Rooms", "Games", "Motel"],
        ),
    }
}

/// Description vocabulary per subcategory.
pub(super) fn topic_words(sub: &str) -> &'static [&'static str] {
    match sub {
        "news-general" => &["headlines", "events", "reporters", "coverage", "today"],
        "news-politics" => &["parliament", "election", "government", "minister", "debate"],
        "news-economy" => &["markets", "inflation", "banks", "budget", "trade"],
        "series-drama" => &["betrayal", "secrets", "relationships", "tragedy", "reunion"],
        "series-comedy" => &["roommates", "misunderstanding", "office", "laughs", "neighbors"],
        "series-crime" => &["detective", "murder", "investigation", "suspect", "evidence"],
        "series-soap" => &["wedding", "rivalry", "inheritance", "romance", "scandal"],
        "ent-talkshow" => &["guests", "interview", "celebrity", "host", "audience"],
        "ent-reality" => &["contestants", "house", "elimination", "tasks", "votes"],
        "ent-quiz" => &["questions", "prize", "contestant", "trivia", "jackpot"],
        "ent-music" => &["concert", "singers", "performance", "charts", "band"],
        "kids-cartoon" => &["animated", "funny", "mischief", "friendship", "colorful"],
        "kids-education" => &["learning", "numbers", "letters", "science", "curious"],
        "kids-adventure" => &["quest", "treasure", "journey", "heroes", "castle"],
        "doc-nature" => &["wildlife", "animals", "habitat", "predators", "migration"],
        "doc-history" => &["war", "kings", "archives", "civilization", "battle"],
        "doc-science" => &["physics", "discovery", "laboratory", "universe", "experiment"],
        "doc-travel" => &["landscapes", "culture", "voyage", "cuisine", "villages"],
        "sports-football" => &["goals", "striker", "stadium", "league", "penalty"],
        "sports-tennis" => &["serve", "set", "grand", "court", "rally"],
        "sports-motor" => &["circuit", "drivers", "lap", "pole", "engine"],
        "sports-magazine" => &["analysis", "highlights", "pundits", "transfers", "results"],
        "movies-action" => &["explosions", "chase", "mercenary", "rescue", "hostage"],
        "movies-drama" => &["family", "loss", "redemption", "struggle", "hope"],
        "movies-comedy" => &["hilarious", "wedding", "roadtrip", "mixup", "holiday"],
        "movies-thriller" => &["conspiracy", "killer", "suspense", "fugitive", "paranoia"],
        _ => &["night", "desire", "passion", "adult", "late"],
    }
}

pub(super) const FILLER: [&str; 16] = [
    "story", "new", "special", "life", "world", "people", "time", "home", "city", "great", "journey", "first", "young",
    "old", "big", "moment",
];

const FIRST: [&str; 24] = [
    "Ana", "Bruno", "Carla", "Diogo", "Eva", "Filipe", "Gina", "Hugo", "Ines", "Joao", "Katia", "Luis", "Marta",
    "Nuno", "Olga", "Pedro", "Rita", "Sergio", "Tania", "Vasco", "Wanda", "Xavier", "Yara", "Zeca",
];
const LAST: [&str; 24] = [
    "Almeida",
    "Barros",
    "Costa",
    "Dias",
    "Esteves",
    "Faria",
    "Gomes",
    "Henriques",
    "Isidro",
    "Jardim",
    "Lopes",
    "Moura",
    "Neves",
    "Oliveira",
    "Pinto",
    "Queiroz",
    "Ramos",
    "Sousa",
    "Teixeira",
    "Valente",
    "Vieira",
    "Xavier",
    "Matos",
    "Nunes",
];

/// The `i`-th of `FIRST.len() * LAST.len()` distinct person names.
pub(super) fn person(i: usize) -> String {
    let n = FIRST.len() * LAST.len();
    let i = i % n;
    format!("{} {}", FIRST[i % FIRST.len()], LAST[i / FIRST.len()])
}

pub(super) const PEOPLE: usize = FIRST.len() * LAST.len();
