"""Writes crates/core/assets/catalog.json (the built-in preference catalog)."""
import json, pathlib

def pref(pid, aspect, category, canonical, implicit, triggers, predicate):
    return {"preference_id": pid, "aspect": aspect, "category": category,
            "canonical_statement": canonical, "implicit_statements": implicit,
            "trigger_topics": triggers, "predicate": predicate}

def text(name, label, pool): return {"name": name, "label": label, "kind": "text", "pool": pool}
def arg(name, label): return {"name": name, "label": label, "kind": "search_arg", "arg": name}
def num(name, label, lo, hi, step, plausible, implausible=None):
    d = {"name": name, "label": label, "kind": "int", "min": lo, "max": hi, "step": step, "plausible": plausible}
    if implausible is not None: d["implausible"] = implausible
    return d
def lst(name, label, pool, lo, hi): return {"name": name, "label": label, "kind": "list", "pool": pool, "min_len": lo, "max_len": hi}
def services(pool): return {"name": "service_costs", "label": "Service Costs", "kind": "services",
                            "pool": [{"name": n, "min": a, "max": b, "step": s} for n, a, b, s in pool]}
def base(lo, hi, step, plausible):
    return num("base_cost", "Total Cost", lo, hi, step, plausible, 1000000)

def t(*words): return [[w] for w in words]

cities = [
    {"name": "New York", "aliases": ["nyc", "new york city", "ny"]},
    {"name": "San Francisco", "aliases": ["sf", "san fran"]},
    {"name": "Los Angeles", "aliases": ["la", "l a"]},
    {"name": "Chicago", "aliases": ["chi town"]},
    {"name": "Seattle", "aliases": []},
    {"name": "Boston", "aliases": []},
    {"name": "Austin", "aliases": []},
    {"name": "Miami", "aliases": []},
    {"name": "Denver", "aliases": []},
    {"name": "Atlanta", "aliases": ["atl"]},
    {"name": "Las Vegas", "aliases": ["vegas"]},
    {"name": "Washington", "aliases": ["washington dc", "dc", "d c"]},
]

F = "flight"
flight = {
    "fields": [
        {"name": "path", "label": "Path", "kind": "route"},
        arg("date", "Date"),
        text("airline", "Airline", ["Delta Airlines", "United Airlines", "American Airlines", "JetBlue", "Alaska Airlines", "Southwest Airlines"]),
        text("flight_number", "Flight Number", ["DL4567", "UA789", "AA1021", "B6231", "AS118", "WN905", "DL230", "UA321", "AA77", "B6990"]),
        num("departure_hour", "Departure Hour (24h)", 5, 22, 1, [0, 23]),
        num("duration_hours", "Time (hours)", 2, 14, 1, [1, 30], 1000),
        text("seat", "Seat", ["Window", "Aisle", "Middle"]),
        lst("amenities", "Amenities", ["WiFi", "Meal Service", "Lounge Access", "Carry-on Baggage Allowance", "Power Outlets", "In-flight Entertainment"], 1, 4),
        base(150, 900, 10, [50, 5000]),
        services([("Checked Bag", 20, 80, 5), ("Business Class Upgrade", 100, 400, 10), ("Extra Legroom", 30, 120, 5), ("Priority Boarding", 10, 40, 5)]),
    ],
    "attribute_lexicon": ["layover", "layovers", "direct", "nonstop", "connecting", "connection", "stops", "stopover",
        "business class", "business", "class", "cabin", "upgrade", "first class", "economy",
        "departure", "depart", "departing", "morning", "early", "what time",
        "airline", "airlines", "carrier",
        "seat", "seating", "window", "aisle",
        "wifi", "wi-fi", "internet", "connectivity",
        "bag", "bags", "baggage", "luggage", "suitcase",
        "duration", "travel time", "shorter", "hours",
        "meal", "legroom", "boarding", "entertainment", "amenities", "price", "fare"],
    "preferences": [
        pref("F-direct", F, "route", "Prefers direct flights without layovers.",
             ["I always keep my schedule packed tight, so I prefer travel routes that minimize transit time.",
              "Sitting around in airports between connections wears me out more than the trip itself.",
              "Every time I've had to change planes something went wrong, so I'd rather get there in one go."],
             t("layover", "layovers", "direct", "nonstop", "connecting", "stopover"),
             {"kind": "list_len_at_most", "field": "path", "max": 2}),
        pref("F-business", F, "cabin class", "Wants a business class upgrade.",
             ["I need room to stretch out and get some work done while I'm in the air.",
              "After a long week, a bit of extra space and a proper seat that reclines makes all the difference."],
             [["business"], ["cabin"], ["upgrade"], ["first class"], ["economy"]],
             {"kind": "service_offered", "service": "Business Class Upgrade"}),
        pref("F-late-departure", F, "departure time", "Prefers flights departing at 9 AM or later.",
             ["I'm really not a morning person; dragging myself to the airport before sunrise is the worst.",
              "I like to have a relaxed breakfast at home before heading out on travel days."],
             t("departure", "depart", "departing", "morning", "early", "what time"),
             {"kind": "at_least", "field": "departure_hour", "min": 9}),
        pref("F-united", F, "airline", "Prefers flying with United Airlines.",
             ["I've built up years of miles with United and I'd hate to break the streak.",
              "The crew on United always make me feel well taken care of."],
             t("airline", "airlines", "carrier"),
             {"kind": "text_is", "field": "airline", "value": "United Airlines"}),
        pref("F-window", F, "seat", "Wants a window seat.",
             ["I love watching the clouds and the city lights below while I travel.",
              "I like having the wall to lean against so I can nap on the way."],
             t("seat", "seating", "window", "aisle"),
             {"kind": "text_is", "field": "seat", "value": "Window"}),
        pref("F-wifi", F, "connectivity", "Needs in-flight WiFi.",
             ["I'll have to answer work emails the whole way there.",
              "Being offline for hours makes me anxious since my team might need me."],
             t("wifi", "wi-fi", "internet", "connectivity"),
             {"kind": "list_has", "field": "amenities", "item": "WiFi"}),
        pref("F-checked-bag", F, "baggage", "Needs a checked bag.",
             ["I'm bringing my camera gear and a couple of outfits for events, so I'm not travelling light.",
              "There's no way everything I'm packing fits in the overhead bin."],
             t("bag", "bags", "baggage", "luggage", "suitcase"),
             {"kind": "service_offered", "service": "Checked Bag"}),
        pref("F-short", F, "duration", "Wants a flight of at most 6 hours.",
             ["I get restless when I'm stuck in transit for most of the day.",
              "Spending a whole day in the air would ruin the first evening of my trip."],
             [["duration"], ["travel time"], ["shorter"], ["hours"]],
             {"kind": "at_most", "field": "duration_hours", "max": 6}),
    ],
}

H = "hotel"
hotel = {
    "fields": [
        text("name", "Name", ["Sunset Retreat", "Vista Point Lodge", "Harbor View Lodge", "Maple Court Inn", "The Meridian", "Parkside Suites", "Lantern House", "Silver Pine Inn"]),
        arg("city", "City"), arg("check_in", "Check-in"), arg("check_out", "Check-out"),
        text("room_type", "Room", ["King Room", "Queen Room", "Double Room", "Twin Room"]),
        num("rating", "Rating (0-10)", 3, 10, 1, [0, 10], 42),
        num("floor", "Floor", 1, 20, 1, [1, 120], 900),
        text("view", "View", ["City View", "Ocean View", "Mountain View", "Courtyard View"]),
        lst("amenities", "Amenities", ["WiFi", "Pool", "Gym", "Pets Allowed", "Business Workspace", "Spa"], 1, 4),
        base(400, 2000, 10, [50, 20000]),
        services([("Parking", 40, 120, 5), ("Breakfast", 50, 150, 5), ("Late Checkout", 20, 60, 5), ("Airport Shuttle", 30, 80, 5)]),
    ],
    "attribute_lexicon": ["parking", "park", "garage", "bed", "beds", "room type", "king", "queen",
        "rating", "ratings", "reviews", "stars", "rated", "view", "views", "scenery",
        "gym", "fitness", "workout", "exercise", "breakfast", "floor", "high floor", "elevation",
        "amenities", "pool", "spa", "checkout", "shuttle", "location", "price", "wifi"],
    "preferences": [
        pref("H-parking", H, "parking", "Needs parking at the hotel.",
             ["I find it really reassuring to know that my car is well taken care of while I'm exploring a new city.",
              "I'm planning to drive around a lot, so I need somewhere to leave the car overnight where I'm staying."],
             t("parking", "park", "garage"),
             {"kind": "service_offered", "service": "Parking"}),
        pref("H-king", H, "bed", "Wants a king room.",
             ["I sprawl out when I sleep, so I need as much bed as I can get.",
              "My partner and I both toss and turn, and anything narrow means nobody sleeps."],
             [["bed"], ["beds"], ["room type"], ["king"], ["queen"]],
             {"kind": "text_is", "field": "room_type", "value": "King Room"}),
        pref("H-rating", H, "rating", "Wants a place rated 8 or higher.",
             ["I've been burned by poorly reviewed places before, so I only trust spots that guests rave about.",
              "Honestly, I read every review before I book anything; I need to see people loved it."],
             t("rating", "ratings", "reviews", "stars", "rated"),
             {"kind": "at_least", "field": "rating", "min": 8}),
        pref("H-ocean", H, "view", "Wants an ocean view room.",
             ["Nothing relaxes me like waking up to waves rolling in outside the window.",
              "I want to watch the sunset over the water from my room every evening."],
             t("view", "views", "scenery"),
             {"kind": "text_is", "field": "view", "value": "Ocean View"}),
        pref("H-gym", H, "fitness", "Needs a gym on site.",
             ["I never skip my morning workout, even when I'm on the road.",
              "Lifting weights first thing keeps me sane during busy trips."],
             t("gym", "fitness", "workout", "exercise"),
             {"kind": "list_has", "field": "amenities", "item": "Gym"}),
        pref("H-breakfast", H, "breakfast", "Wants breakfast included.",
             ["I can't function until I've had a proper meal first thing, and I hate hunting for cafes at 7am.",
              "Starting the day with eggs and coffee downstairs is my favourite part of travelling."],
             t("breakfast"),
             {"kind": "service_offered", "service": "Breakfast"}),
        pref("H-high-floor", H, "floor", "Wants a room on floor 10 or higher.",
             ["Street sounds keep me up at night, so I like being far above the traffic.",
              "I love looking down on the city skyline from way up."],
             [["floor"], ["high floor"], ["elevation"]],
             {"kind": "at_least", "field": "floor", "min": 10}),
    ],
}

A = "apartment"
apartment = {
    "fields": [
        text("name", "Name", ["Maple Loft", "Riverside Flats", "Cedar House", "Oak Terrace", "Brick Lane Studio", "Willow Place", "Copper Row", "Juniper Court"]),
        arg("city", "City"), arg("check_in", "Check-in"), arg("check_out", "Check-out"),
        num("bedrooms", "Bedrooms", 1, 4, 1, [0, 10], 60),
        num("bathrooms", "Bathrooms", 1, 3, 1, [0, 8], 45),
        num("floor", "Floor", 1, 15, 1, [0, 120]),
        lst("amenities", "Amenities", ["WiFi", "Washer", "Full Kitchen", "Balcony", "Air Conditioning", "Elevator", "Workspace"], 1, 4),
        base(300, 1800, 10, [50, 20000]),
        services([("Cleaning Fee", 40, 150, 5), ("Pet Fee", 30, 100, 5), ("Early Check-in", 20, 60, 5), ("Extra Bed", 25, 70, 5)]),
    ],
    "attribute_lexicon": ["bedroom", "bedrooms", "rooms", "kitchen", "cook", "cooking", "pet", "pets", "dog", "cat",
        "laundry", "washer", "washing", "balcony", "outdoor space", "terrace", "floor", "stairs", "elevator",
        "bathroom", "bathrooms", "amenities", "air conditioning", "cleaning", "workspace", "price"],
    "preferences": [
        pref("A-bedrooms", A, "bedrooms", "Needs at least 2 bedrooms.",
             ["My sister is coming along and we both need our own space to unwind at night.",
              "I'm a light sleeper, and my friend snores like a freight train."],
             t("bedroom", "bedrooms", "rooms"),
             {"kind": "at_least", "field": "bedrooms", "min": 2}),
        pref("A-kitchen", A, "kitchen", "Needs a full kitchen.",
             ["Eating out every night gets old; I love making my own pasta when I travel.",
              "I follow a strict meal plan, so I prepare most of my food myself."],
             t("kitchen", "cook", "cooking"),
             {"kind": "list_has", "field": "amenities", "item": "Full Kitchen"}),
        pref("A-pets", A, "pets", "Travels with a pet and needs a place that accepts pets.",
             ["My golden retriever goes everywhere with me; she'd be heartbroken if I left her behind.",
              "I can't leave Biscuit at home, he gets so anxious without me."],
             t("pet", "pets", "dog", "cat"),
             {"kind": "service_offered", "service": "Pet Fee"}),
        pref("A-laundry", A, "laundry", "Needs an in-unit washer.",
             ["I pack light and plan to freshen up my clothes halfway through the stay.",
              "I'll be hiking every day, so my clothes are going to need a proper wash."],
             t("laundry", "washer", "washing"),
             {"kind": "list_has", "field": "amenities", "item": "Washer"}),
        pref("A-balcony", A, "outdoor space", "Wants a balcony.",
             ["My favourite thing is sipping coffee outside in the fresh morning air.",
              "I like to step out and get some air in the evenings without leaving the place."],
             [["balcony"], ["outdoor space"], ["terrace"]],
             {"kind": "list_has", "field": "amenities", "item": "Balcony"}),
        pref("A-low-floor", A, "floor", "Wants to stay on floor 3 or lower.",
             ["My knees aren't what they used to be, and I don't want to depend on a lift.",
              "I get uneasy being too far off the ground."],
             t("floor", "stairs", "elevator"),
             {"kind": "at_most", "field": "floor", "max": 3}),
        pref("A-bathrooms", A, "bathrooms", "Needs at least 2 bathrooms.",
             ["Four of us sharing one sink every morning would be chaos.",
              "We all get ready at the same time, so waiting in line to shower is not an option."],
             t("bathroom", "bathrooms"),
             {"kind": "at_least", "field": "bathrooms", "min": 2}),
    ],
}

C = "rental_car"
car = {
    "fields": [
        text("company", "Company", ["Hertz", "Enterprise", "Avis", "National", "Sixt", "Alamo"]),
        arg("city", "City"), arg("pickup_date", "Pick-up"), arg("return_date", "Return"),
        text("model", "Model", ["Toyota Corolla", "Honda CR-V", "Tesla Model 3", "Ford Mustang", "Chrysler Pacifica", "Jeep Wrangler", "Toyota Prius"]),
        text("transmission", "Transmission", ["Automatic", "Manual"]),
        text("fuel", "Fuel", ["Gasoline", "Hybrid", "Electric"]),
        num("seats", "Seats", 2, 8, 1, [1, 15], 99),
        lst("amenities", "Features", ["Bluetooth", "Heated Seats", "Sunroof", "Apple CarPlay", "Backup Camera"], 1, 3),
        base(150, 900, 10, [30, 10000]),
        services([("Insurance", 40, 150, 5), ("GPS", 10, 40, 5), ("Child Seat", 15, 50, 5), ("Additional Driver", 20, 60, 5)]),
    ],
    "attribute_lexicon": ["model", "make", "brand", "transmission", "automatic", "manual", "stick", "gear",
        "seats", "passengers", "capacity", "insurance", "coverage", "protection",
        "child", "kids", "toddler", "booster", "fuel", "electric", "gas", "gasoline", "hybrid", "ev",
        "sunroof", "roof", "features", "gps", "bluetooth", "camera", "driver", "price"],
    "preferences": [
        pref("C-wrangler", C, "model", "Wants to drive a Jeep Wrangler.",
             ["I've always dreamed of taking an off-road icon with removable doors out on the trails.",
              "Something rugged that can handle a dirt road and still look good at the beach is what I'm after."],
             t("model", "make", "brand"),
             {"kind": "text_is", "field": "model", "value": "Jeep Wrangler"}),
        pref("C-automatic", C, "transmission", "Needs an automatic transmission.",
             ["I never learned to work a clutch, and I'm not about to start in a strange city.",
              "City traffic with a stick shift sounds like my personal nightmare."],
             t("transmission", "automatic", "manual", "stick", "gear"),
             {"kind": "text_is", "field": "transmission", "value": "Automatic"}),
        pref("C-seven-seats", C, "capacity", "Needs at least 7 seats.",
             ["There will be seven of us piling in for the day trips.",
              "Both families are coming along, kids included, and we want to ride together."],
             t("seats", "passengers", "capacity"),
             {"kind": "at_least", "field": "seats", "min": 7}),
        pref("C-insurance", C, "insurance", "Wants full insurance coverage.",
             ["I'd sleep much better knowing a scratch in a parking lot won't cost me a fortune.",
              "Last time a tiny dent turned into a huge bill, and I never want that again."],
             t("insurance", "coverage", "protection"),
             {"kind": "service_offered", "service": "Insurance"}),
        pref("C-child-seat", C, "child seat", "Needs a child seat.",
             ["My three-year-old will be with me the whole time.",
              "Our toddler has to ride safely strapped in, that's non-negotiable."],
             t("child", "kids", "toddler", "booster"),
             {"kind": "service_offered", "service": "Child Seat"}),
        pref("C-electric", C, "powertrain", "Wants an electric car.",
             ["I try hard to keep my carbon footprint small, even on vacation.",
              "I'd love to skip the pump entirely and just plug in overnight."],
             t("fuel", "electric", "gas", "gasoline", "hybrid", "ev"),
             {"kind": "text_is", "field": "fuel", "value": "Electric"}),
        pref("C-sunroof", C, "features", "Wants a sunroof.",
             ["Driving under open skies with the breeze coming in is what road trips are about.",
              "I love looking up at the stars on night drives."],
             t("sunroof", "roof", "features"),
             {"kind": "list_has", "field": "amenities", "item": "Sunroof"}),
    ],
}

R = "restaurant"
restaurant = {
    "fields": [
        text("name", "Name", ["Golden Fork", "Blue Harbor Grill", "Casa Verde", "Sakura House", "Le Petit Jardin", "Spice Route", "The Olive Tree", "Ember & Oak"]),
        arg("city", "City"), arg("date", "Date"),
        text("cuisine", "Cuisine", ["Italian", "Japanese", "Mexican", "French", "Indian", "Thai", "American"]),
        num("rating", "Rating (0-5)", 2, 5, 1, [0, 5], 50),
        text("seating", "Seating", ["Indoor", "Outdoor", "Bar"]),
        text("dress_code", "Dress Code", ["Casual", "Smart Casual", "Formal"]),
        num("distance_km", "Distance (km)", 1, 15, 1, [0, 100], 5000),
        lst("amenities", "Amenities", ["Vegan Options", "Gluten-Free Options", "Live Music", "Private Room", "Wheelchair Accessible", "Kids Menu"], 1, 3),
        base(40, 300, 5, [5, 5000]),
        services([("Corkage", 15, 40, 5), ("Reservation Deposit", 10, 50, 5), ("Birthday Cake", 20, 60, 5), ("Valet Parking", 10, 30, 5)]),
    ],
    "attribute_lexicon": ["vegan", "vegetarian", "dietary", "diet", "allergies", "restrictions",
        "cuisine", "food", "italian", "japanese", "mexican", "seating", "outdoor", "indoor", "patio",
        "rating", "reviews", "rated", "stars", "distance", "far", "walking", "nearby", "close", "location",
        "wine", "corkage", "drinks", "bottle", "music", "atmosphere", "ambiance", "entertainment",
        "dress", "attire", "formal", "casual", "menu", "kids menu", "accessible", "price"],
    "preferences": [
        pref("R-vegan", R, "dietary", "Needs vegan options.",
             ["I haven't eaten anything from an animal in over five years.",
              "I'm strictly plant-based, so a menu full of steak doesn't do much for me."],
             t("vegan", "vegetarian", "dietary", "diet", "allergies", "restrictions"),
             {"kind": "list_has", "field": "amenities", "item": "Vegan Options"}),
        pref("R-japanese", R, "cuisine", "Wants Japanese food.",
             ["Nothing beats fresh sushi and a warm bowl of miso after a long day.",
              "I've been craving ramen and sashimi for weeks."],
             t("cuisine", "food", "italian", "japanese", "mexican"),
             {"kind": "text_is", "field": "cuisine", "value": "Japanese"}),
        pref("R-outdoor", R, "seating", "Wants outdoor seating.",
             ["I love eating in the open air and people-watching on a warm evening.",
              "Stuffy dining rooms make me claustrophobic; give me a table under the sky."],
             t("seating", "outdoor", "indoor", "patio"),
             {"kind": "text_is", "field": "seating", "value": "Outdoor"}),
        pref("R-rating", R, "reputation", "Wants a place rated 4 or higher.",
             ["I only have one night out, so it really has to be a place everyone raves about.",
              "I always check what other diners say before I trust a kitchen."],
             t("rating", "reviews", "rated", "stars"),
             {"kind": "at_least", "field": "rating", "min": 4}),
        pref("R-close", R, "distance", "Wants a place within 3 km.",
             ["After a full day I don't want to trek across town just to eat.",
              "I'd like to be able to stroll over and back without calling a cab."],
             t("distance", "far", "walking", "nearby", "close", "location"),
             {"kind": "at_most", "field": "distance_km", "max": 3}),
        pref("R-corkage", R, "wine", "Wants to bring their own wine.",
             ["I'm bringing a special bottle from a vineyard I visited last year to share over dinner.",
              "My friend gave me a vintage red for this trip and I want to open it with the meal."],
             t("wine", "corkage", "drinks", "bottle"),
             {"kind": "service_offered", "service": "Corkage"}),
        pref("R-music", R, "atmosphere", "Wants live music.",
             ["A night out isn't complete for me without a band playing in the corner.",
              "I love when dinner comes with a little jazz in the background."],
             t("music", "atmosphere", "ambiance", "entertainment"),
             {"kind": "list_has", "field": "amenities", "item": "Live Music"}),
        pref("R-casual", R, "dress", "Wants a casual dress code.",
             ["I'm packing jeans and sneakers only, nothing fancy.",
              "Putting on a suit on vacation is the last thing I want to do."],
             t("dress", "attire", "formal", "casual"),
             {"kind": "text_is", "field": "dress_code", "value": "Casual"}),
    ],
}

catalog = {"version": 1, "cities": cities,
           "aspects": {"flight": flight, "hotel": hotel, "apartment": apartment, "rental_car": car, "restaurant": restaurant}}
out = pathlib.Path(__file__).resolve().parent.parent / "crates/core/assets/catalog.json"
out.write_text(json.dumps(catalog, indent=2) + "\n")
print(out)
