"""Regenerate the vendored offline benchmark under src/schemaprobe/data/toy/.

Writes catalog.json (12 small databases merged with db-prefixed tables),
examples.jsonl (questions + gold columns), llm/responses.jsonl (recorded
hallucinations keyed by question) and config.json.
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "schemaprobe" / "data" / "toy"

# table: (columns, primary key, [(column, ref_table, ref_column)])
DATABASES = {
    "club_1": {
        "club": (["club_id", "club_name", "club_description", "club_location", "founded_year"], ["club_id"], []),
        "student": (["student_id", "last_name", "first_name", "age", "sex", "major", "advisor", "city_code"], ["student_id"], []),
        "member_of_club": (["student_id", "club_id", "position", "join_date"], [], [("student_id", "student", "student_id"), ("club_id", "club", "club_id")]),
        "club_event": (["event_id", "club_id", "event_name", "event_date", "budget"], ["event_id"], [("club_id", "club", "club_id")]),
        "club_officer": (["officer_id", "club_id", "student_id", "role_title"], ["officer_id"], [("club_id", "club", "club_id")]),
    },
    "station_weather": {
        "train": (["train_id", "train_number", "train_name", "origin", "destination", "departure_time", "interval", "operator"], ["train_id"], []),
        "station": (["station_id", "network_name", "services", "local_authority", "latitude", "longitude"], ["station_id"], []),
        "route": (["train_id", "station_id"], [], [("train_id", "train", "train_id"), ("station_id", "station", "station_id")]),
        "weekly_weather": (["station_id", "day_of_week", "high_temperature", "low_temperature", "avg_temperature", "precipitation", "humidity", "wind_speed_mph"], [], [("station_id", "station", "station_id")]),
        "platform": (["platform_id", "station_id", "platform_number", "is_accessible"], ["platform_id"], [("station_id", "station", "station_id")]),
    },
    "college_2": {
        "instructor": (["instructor_id", "name", "dept_name", "salary"], ["instructor_id"], [("dept_name", "department", "dept_name")]),
        "department": (["dept_name", "building", "budget", "dept_head"], ["dept_name"], []),
        "course": (["course_id", "title", "dept_name", "credits", "course_level"], ["course_id"], [("dept_name", "department", "dept_name")]),
        "teaches": (["instructor_id", "course_id", "sec_id", "semester", "year"], [], [("instructor_id", "instructor", "instructor_id"), ("course_id", "course", "course_id")]),
        "classroom": (["building", "room_number", "floor", "capacity"], ["room_number"], []),
        "takes": (["student_id", "course_id", "sec_id", "semester", "year", "grade"], [], [("course_id", "course", "course_id")]),
    },
    "real_estate_properties": {
        "properties": (["property_id", "property_type_code", "property_name", "date_on_market", "date_sold", "room_count", "vendor_requested_price", "agreed_selling_price", "property_address", "sold_by_agent"], ["property_id"], [("property_type_code", "ref_property_types", "property_type_code")]),
        "ref_property_types": (["property_type_code", "property_type_description"], ["property_type_code"], []),
        "other_property_features": (["property_id", "feature_id", "property_feature_description"], [], [("property_id", "properties", "property_id"), ("feature_id", "other_available_features", "feature_id")]),
        "other_available_features": (["feature_id", "feature_type_code", "feature_name", "feature_description"], ["feature_id"], [("feature_type_code", "ref_feature_types", "feature_type_code")]),
        "ref_feature_types": (["feature_type_code", "feature_type_name"], ["feature_type_code"], []),
    },
    "employee_hire_evaluation": {
        "employee": (["employee_id", "name", "age", "city", "phone"], ["employee_id"], []),
        "shop": (["shop_id", "shop_name", "location", "district", "number_products", "manager_name", "opening_year"], ["shop_id"], []),
        "hiring": (["shop_id", "employee_id", "start_from", "is_full_time"], ["employee_id"], [("shop_id", "shop", "shop_id"), ("employee_id", "employee", "employee_id")]),
        "evaluation": (["employee_id", "year_awarded", "bonus"], [], [("employee_id", "employee", "employee_id")]),
        "training_course": (["course_id", "employee_id", "course_title", "completion_date"], ["course_id"], [("employee_id", "employee", "employee_id")]),
    },
    "cre_doc_template_mgt": {
        "ref_template_types": (["template_type_code", "template_type_description"], ["template_type_code"], []),
        "templates": (["template_id", "version_number", "template_type_code", "date_effective_from", "date_effective_to", "template_details"], ["template_id"], [("template_type_code", "ref_template_types", "template_type_code")]),
        "documents": (["document_id", "template_id", "document_name", "document_description", "created_date", "other_details"], ["document_id"], [("template_id", "templates", "template_id")]),
        "paragraphs": (["paragraph_id", "document_id", "paragraph_text", "other_details"], ["paragraph_id"], [("document_id", "documents", "document_id")]),
        "document_authors": (["document_id", "author_name", "author_email"], [], [("document_id", "documents", "document_id")]),
    },
    "student_transcripts_tracking": {
        "students": (["student_id", "current_address_id", "first_name", "middle_name", "last_name", "cell_mobile_number", "email_address", "ssn", "date_first_registered", "date_left"], ["student_id"], [("current_address_id", "addresses", "address_id")]),
        "semesters": (["semester_id", "semester_name", "semester_description", "start_date", "end_date"], ["semester_id"], []),
        "degree_programs": (["degree_program_id", "department_id", "degree_summary_name", "degree_summary_description", "duration_years"], ["degree_program_id"], []),
        "student_enrolment": (["student_enrolment_id", "degree_program_id", "semester_id", "student_id"], ["student_enrolment_id"], [("degree_program_id", "degree_programs", "degree_program_id"), ("semester_id", "semesters", "semester_id"), ("student_id", "students", "student_id")]),
        "transcripts": (["transcript_id", "transcript_date", "transcript_type", "other_details"], ["transcript_id"], []),
        "addresses": (["address_id", "line_1", "city", "zip_postcode", "country"], ["address_id"], []),
    },
    "cre_theme_park": {
        "locations": (["location_id", "location_name", "address", "other_details"], ["location_id"], []),
        "tourist_attractions": (["tourist_attraction_id", "attraction_type_code", "location_id", "how_to_get_there", "name", "description", "opening_hours"], ["tourist_attraction_id"], [("location_id", "locations", "location_id")]),
        "visitors": (["tourist_id", "visitor_email", "tourist_details"], ["tourist_id"], []),
        "visits": (["visit_id", "tourist_attraction_id", "tourist_id", "visit_date", "visit_details"], ["visit_id"], [("tourist_attraction_id", "tourist_attractions", "tourist_attraction_id"), ("tourist_id", "visitors", "tourist_id")]),
        "hotels": (["hotel_id", "hotel_name", "phone_number", "star_rating_code", "pets_allowed_yn", "price_range", "hotel_details"], ["hotel_id"], []),
    },
    "match_season": {
        "country": (["country_id", "country_name", "capital", "official_native_language", "population"], ["country_id"], []),
        "team": (["team_id", "name", "home_city"], ["team_id"], []),
        "match_season": (["season", "player", "position", "country", "team", "draft_pick_number", "draft_class", "college"], ["season"], [("country", "country", "country_id"), ("team", "team", "team_id")]),
        "player": (["player_id", "player", "years_played", "total_wl", "singles_wl", "doubles_wl", "team"], ["player_id"], [("team", "team", "team_id")]),
        "stadium": (["stadium_id", "stadium_name", "capacity", "city", "opened_year"], ["stadium_id"], []),
    },
    "game_1": {
        "student": (["stuid", "lname", "fname", "age", "sex", "major", "advisor", "city_code"], ["stuid"], []),
        "sportsinfo": (["stuid", "sportname", "hoursperweek", "gamesplayed", "onscholarship"], [], [("stuid", "student", "stuid")]),
        "plays_games": (["stuid", "gameid", "hours_played"], [], [("stuid", "student", "stuid"), ("gameid", "video_games", "gameid")]),
        "video_games": (["gameid", "gname", "gtype", "release_year"], ["gameid"], []),
        "coach": (["coach_id", "coach_name", "sportname", "salary", "years_experience"], ["coach_id"], []),
    },
    "bookstore": {
        "book": (["book_id", "title", "isbn", "publication_year", "publisher_id", "price", "page_count"], ["book_id"], [("publisher_id", "publisher", "publisher_id")]),
        "author": (["author_id", "author_name", "nationality", "birth_year"], ["author_id"], []),
        "book_author": (["book_id", "author_id"], [], [("book_id", "book", "book_id"), ("author_id", "author", "author_id")]),
        "publisher": (["publisher_id", "publisher_name", "city", "founded_year"], ["publisher_id"], []),
        "customer_order": (["order_id", "book_id", "customer_name", "quantity", "order_date", "shipping_address"], ["order_id"], [("book_id", "book", "book_id")]),
    },
    "network_1": {
        "highschooler": (["id", "name", "grade"], ["id"], []),
        "friend": (["student_id", "friend_id"], [], [("student_id", "highschooler", "id"), ("friend_id", "highschooler", "id")]),
        "likes": (["student_id", "liked_id"], [], [("student_id", "highschooler", "id"), ("liked_id", "highschooler", "id")]),
        "school_club": (["club_id", "club_name", "room", "advisor_name", "meeting_day"], ["club_id"], []),
        "club_membership": (["student_id", "club_id"], [], [("student_id", "highschooler", "id"), ("club_id", "school_club", "club_id")]),
    },
}

# (question, gold columns as db.table.column, recorded hallucination)
QUESTIONS = [
    (
        "Find the names of all clubs that have at least one member older than 20.",
        ["club_1.club.club_name", "club_1.student.age", "club_1.member_of_club.club_id", "club_1.member_of_club.student_id"],
        "Club(name, id), member_of_club(club id, student id), Student(id, age)",
    ),
    (
        "Where is each club located and when was it founded?",
        ["club_1.club.club_location", "club_1.club.founded_year", "club_1.club.club_name"],
        "Club(name, location, founded year)",
    ),
    (
        "Give the latitude and longitude of every station served by the train named Express.",
        ["station_weather.station.latitude", "station_weather.station.longitude", "station_weather.train.train_name", "station_weather.route.station_id"],
        "Station(station id, latitude, longitude), Route(train id, station id), Train(train id, train name)",
    ),
    (
        "What is the highest temperature and the strongest wind recorded at each station?",
        ["station_weather.weekly_weather.high_temperature", "station_weather.weekly_weather.wind_speed_mph", "station_weather.weekly_weather.station_id"],
        "Weekly_weather(station id, high temperature, wind speed)",
    ),
    (
        "Which instructors earn more than the average pay of their department?",
        ["college_2.instructor.name", "college_2.instructor.salary", "college_2.instructor.dept_name"],
        "Instructor(name, salary, department name)",
    ),
    (
        "How many seats are there in the rooms of the Watson building?",
        ["college_2.classroom.capacity", "college_2.classroom.building", "college_2.classroom.room_number"],
        "Classroom(building, room number, capacity)",
    ),
    (
        "List the course titles taught in the fall by teachers of the physics department.",
        ["college_2.course.title", "college_2.teaches.semester", "college_2.instructor.dept_name", "college_2.teaches.course_id"],
        "Course(course id, title), Teaches(course id, instructor id, semester), Instructor(instructor id, department name)",
    ),
    (
        "What are the names of properties that are either houses or apartments with more than 1 room?",
        ["real_estate_properties.properties.property_name", "real_estate_properties.properties.property_type_code", "real_estate_properties.properties.room_count"],
        "Property(name, type, number of rooms)",
    ),
    (
        "What is the difference between the asking price and the final sale price for every home?",
        ["real_estate_properties.properties.vendor_requested_price", "real_estate_properties.properties.agreed_selling_price", "real_estate_properties.properties.property_name"],
        "Properties(property name, requested price, selling price)",
    ),
    (
        "Which features are available for each kind of amenity?",
        ["real_estate_properties.other_available_features.feature_name", "real_estate_properties.ref_feature_types.feature_type_name", "real_estate_properties.other_available_features.feature_type_code"],
        "Available_features(feature name, feature type code), Feature_types(feature type code, feature type name)",
    ),
    (
        "Find the name of the employee who got the highest one time bonus.",
        ["employee_hire_evaluation.employee.name", "employee_hire_evaluation.evaluation.bonus", "employee_hire_evaluation.evaluation.employee_id"],
        "Employee(name, employee id), Evaluations(employee id, bonus)",
    ),
    (
        "Which district has the shops with the most products, and who manages them?",
        ["employee_hire_evaluation.shop.district", "employee_hire_evaluation.shop.number_products", "employee_hire_evaluation.shop.manager_name"],
        "Shop(district, number of products, manager name)",
    ),
    (
        "Return the name and description of the document that uses the template with the most versions.",
        ["cre_doc_template_mgt.documents.document_name", "cre_doc_template_mgt.documents.document_description", "cre_doc_template_mgt.templates.version_number", "cre_doc_template_mgt.documents.template_id"],
        "Document(name, description, template id), Templates(template id, version number)",
    ),
    (
        "Show the text of every paragraph in the document written by Dana.",
        ["cre_doc_template_mgt.paragraphs.paragraph_text", "cre_doc_template_mgt.document_authors.author_name", "cre_doc_template_mgt.paragraphs.document_id"],
        "Paragraphs(document id, paragraph text), Document_authors(document id, author name)",
    ),
    (
        "What are the start and end dates of the semester in which the most students enrolled in a bachelor degree?",
        ["student_transcripts_tracking.semesters.start_date", "student_transcripts_tracking.semesters.end_date", "student_transcripts_tracking.student_enrolment.semester_id", "student_transcripts_tracking.degree_programs.degree_summary_name"],
        "Semester(id, start date, end date), Enrollment(semester id, student id, degree), Student(id, name)",
    ),
    (
        "What is the cell phone number and email of the student who registered first?",
        ["student_transcripts_tracking.students.cell_mobile_number", "student_transcripts_tracking.students.email_address", "student_transcripts_tracking.students.date_first_registered"],
        "Students(cell mobile number, email address, date first registered)",
    ),
    (
        "How to get to the attraction named Museum and what is its address?",
        ["cre_theme_park.tourist_attractions.how_to_get_there", "cre_theme_park.tourist_attractions.name", "cre_theme_park.locations.address", "cre_theme_park.tourist_attractions.location_id"],
        "Locations(address, location id), Tourist_attractions(how to get there, location id, name)",
    ),
    (
        "Which hotels allow pets and what price range are they in?",
        ["cre_theme_park.hotels.pets_allowed_yn", "cre_theme_park.hotels.price_range", "cre_theme_park.hotels.hotel_id"],
        "Hotels(hotel id, pets allowed, price range)",
    ),
    (
        "Show the season, the player, and the name of the team that the players belong to.",
        ["match_season.match_season.season", "match_season.match_season.player", "match_season.team.name", "match_season.match_season.team"],
        "Match_season(season, team, player), Team(name, team identifier)",
    ),
    (
        "Which stadiums hold more than 50000 people, and in what town?",
        ["match_season.stadium.stadium_name", "match_season.stadium.capacity", "match_season.stadium.city"],
        "Stadium(stadium name, capacity, city)",
    ),
    (
        "Show all sport names and student IDs for students who are 20 or older.",
        ["game_1.sportsinfo.sportname", "game_1.sportsinfo.stuid", "game_1.student.age", "game_1.student.stuid"],
        "SportsInfo(sportname, student id), Student(age, first name, student id)",
    ),
    (
        "How many hours does each student spend on video games of the action genre?",
        ["game_1.plays_games.hours_played", "game_1.plays_games.stuid", "game_1.video_games.gtype", "game_1.plays_games.gameid"],
        "Plays_games(student id, game id, hours played), Video_games(game id, game type)",
    ),
    (
        "Which writers have published books priced above 30 dollars?",
        ["bookstore.author.author_name", "bookstore.book.price", "bookstore.book_author.author_id", "bookstore.book_author.book_id"],
        "book(book_id, title, price), book_author(book_id, author_id), author(author_id, author_name)",
    ),
    (
        "Count the orders placed by each customer for books from publishers in Boston.",
        ["bookstore.customer_order.customer_name", "bookstore.customer_order.order_id", "bookstore.publisher.city", "bookstore.book.publisher_id"],
        "Customer_order(order id, customer name, book id), Book(book id, publisher id), Publisher(publisher id, city)",
    ),
    (
        "What are the names of high schoolers who have friends in grade 10?",
        ["network_1.highschooler.name", "network_1.highschooler.grade", "network_1.friend.friend_id", "network_1.friend.student_id"],
        "Highschooler(id, name, grade), Friend(student id, friend id)",
    ),
]


def catalog_dict() -> dict:
    tables = []
    for db, db_tables in DATABASES.items():
        for tname, (cols, pk, fks) in db_tables.items():
            tables.append(
                {
                    "name": f"{db}.{tname}",
                    "columns": cols,
                    "primary_key": pk,
                    "foreign_keys": [{"column": c, "ref_table": f"{db}.{rt}", "ref_column": rc} for c, rt, rc in fks],
                }
            )
    return {"name": "toy_union", "prefixed": True, "tables": tables}


def main() -> None:
    (OUT / "llm").mkdir(parents=True, exist_ok=True)
    (OUT / "catalog.json").write_text(json.dumps(catalog_dict(), indent=1) + "\n", encoding="utf-8")
    with open(OUT / "examples.jsonl", "w", encoding="utf-8") as fh:
        for q, gold, _ in QUESTIONS:
            fh.write(json.dumps({"question": q, "gold_columns": gold, "source_db": gold[0].split(".")[0]}) + "\n")
    with open(OUT / "llm" / "responses.jsonl", "w", encoding="utf-8") as fh:
        for q, _, reply in QUESTIONS:
            fh.write(json.dumps({"question": q, "response": reply}) + "\n")
    config = {
        "catalog": "catalog.json",
        "prefix_db": False,
        "index_dir": "index",
        "cache_dir": ".cache",
        "prompt": "spider",
        "embedding": {"provider": "hash", "dim": 1024},
        "llm": {"provider": "fixture", "fixture_dir": "llm"},
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=1) + "\n", encoding="utf-8")
    n_tables = sum(len(s) for s in DATABASES.values())
    n_cols = sum(len(c) for s in DATABASES.values() for c, _, _ in s.values())
    print(f"{len(DATABASES)} databases, {n_tables} tables, {n_cols} columns, {len(QUESTIONS)} questions -> {OUT}")


if __name__ == "__main__":
    main()
